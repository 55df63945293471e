//! Command-line front end: generate candidates, embed, score, plot and pick.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod svg;

pub use args::Cli;
pub use commands::run;
pub use error::CliError;

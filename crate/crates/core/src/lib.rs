//! Design-space mapping for multi-objective machine design.
//!
//! The crate generates design-candidate sets with NSGA-II over a synthetic
//! switched-reluctance-machine surrogate, embeds their objective vectors with
//! exact t-SNE (PCA and Isomap as baselines), scores the resulting maps and
//! picks one representative candidate per cluster.
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the element type for the common double-precision case.

pub mod affinity;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod kv;
pub mod linalg;
pub mod metrics;
pub mod moo;
pub mod scalar;
pub mod synth;
pub mod tsne;

pub use error::{Error, ErrorClass, Result};
pub use linalg::Matrix;
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type CandidateSet64 = dataset::CandidateSet<f64>;
pub type DistanceMatrix64 = dataset::DistanceMatrix<f64>;
pub type AffinityMatrix64 = affinity::AffinityMatrix<f64>;
pub type AffinityMatrix32 = affinity::AffinityMatrix<f32>;
pub type TsneConfig64 = tsne::TsneConfig<f64>;
pub type TsneConfig32 = tsne::TsneConfig<f32>;
pub type EmbeddingState64 = tsne::EmbeddingState<f64>;

pub type PcaResult64 = baselines::PcaResult<f64>;
pub type QualityReport64 = metrics::QualityReport<f64>;

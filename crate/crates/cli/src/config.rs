//! Flag, config-file and default resolution.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use desmap::kv::KeyValues;

use crate::error::CliError;

pub const SEED_ENV: &str = "MP_SEED";

/// Resolves each setting as flag, then config file, then default.
#[derive(Debug, Default)]
pub struct Resolver {
    file: KeyValues,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).map_err(|e| desmap::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            file: KeyValues::parse(&text)?,
        })
    }

    pub fn from_kv(file: KeyValues) -> Self {
        Self { file }
    }

    pub fn optional<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn value<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.optional(key, flag)?.unwrap_or(default))
    }

    pub fn required<T>(&self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| CliError::Usage(format!("missing --{}", key.replace('_', "-"))))
    }

    pub fn path(&self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.required(key, flag)
    }

    /// `true` if the flag is set or the config file says so.
    pub fn switch(&self, key: &str, flag: bool) -> Result<bool, CliError> {
        Ok(flag || self.optional::<bool>(key, None)?.unwrap_or(false))
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = self.optional("seed", flag)? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| CliError::Usage(format!("{SEED_ENV}: {e}"))),
            Err(_) => Ok(0),
        }
    }
}

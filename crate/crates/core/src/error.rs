use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numeric,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("duplicate id `{id}` at row {row}")]
    DuplicateId { id: String, row: usize },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid metadata: {0}")]
    Metadata(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("column `{column}` has zero variance")]
    ZeroVarianceColumn { column: String },

    #[error("all off-diagonal distances in row {row} are infinite")]
    DegenerateRow { row: usize },

    #[error("perplexity {perplexity} outside (1, {max}] for point {point}")]
    PerplexityOutOfRange {
        perplexity: f64,
        max: f64,
        point: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite coordinate after iteration {iteration} (learning rate too large?)")]
    NonFiniteUpdate { iteration: usize },

    #[error("requested {requested} components but data rank is {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("neighbor graph is disconnected into {} components (sizes: {})",
        .components.len(),
        .components.iter().map(|c| c.len().to_string()).collect::<Vec<_>>().join(", "))]
    DisconnectedGraph { components: Vec<Vec<usize>> },

    #[error("k = {k} too large for {n} points (need k < {limit})")]
    KTooLarge { k: usize, n: usize, limit: usize },

    #[error("silhouette needs at least two clusters")]
    SingleCluster,

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::MissingColumn { .. }
            | Error::DuplicateId { .. }
            | Error::NonNumericCell { .. }
            | Error::RaggedRow { .. }
            | Error::Metadata(_)
            | Error::InvalidInput(_)
            | Error::IdMismatch(_) => ErrorClass::Input,
            Error::ZeroVarianceColumn { .. }
            | Error::DegenerateRow { .. }
            | Error::PerplexityOutOfRange { .. }
            | Error::DimensionMismatch(_)
            | Error::NonFiniteUpdate { .. }
            | Error::RankDeficient { .. }
            | Error::DisconnectedGraph { .. }
            | Error::KTooLarge { .. }
            | Error::SingleCluster => ErrorClass::Numeric,
            Error::Io { .. } => ErrorClass::Io,
            Error::Csv { source, .. } => {
                if source.is_io_error() {
                    ErrorClass::Io
                } else {
                    ErrorClass::Input
                }
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

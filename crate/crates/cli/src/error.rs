use desmap::ErrorClass;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] desmap::Error),

    #[error("plot needs a 2-D embedding, got {dim} coordinate columns")]
    NotTwoDimensional { dim: usize },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 1 = bad input or usage, 2 = numeric failure, 3 = IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Input => 1,
                ErrorClass::Numeric => 2,
                ErrorClass::Io => 3,
            },
            CliError::NotTwoDimensional { .. } | CliError::Usage(_) => 1,
        }
    }
}

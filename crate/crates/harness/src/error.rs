use gravsim_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invalid input, 3 for numerical tolerance failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Schema(_) => 2,
            HarnessError::Core(e) => match e {
                CoreError::InvalidInput(_)
                | CoreError::Unsupported(_)
                | CoreError::DimensionMismatch(_)
                | CoreError::LabelMismatch { .. } => 2,
                CoreError::Truncation { .. }
                | CoreError::NotHermitian(_)
                | CoreError::GridCoverage { .. }
                | CoreError::NonConvergence { .. }
                | CoreError::StepSizeUnderflow { .. } => 3,
            },
            HarnessError::Io { .. } | HarnessError::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] xsl_core::Error),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("oracle check failed: {0}")]
    OracleMismatch(String),
}

impl LabError {
    /// Process exit status: 2 for a failed oracle check, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::OracleMismatch(_) => 2,
            _ => 1,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;

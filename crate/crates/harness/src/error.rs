use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration or command line; maps to exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fracshear_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HoalError {
    #[error(transparent)]
    Core(#[from] hoal_core::Error),
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("invalid run setup: {0}")]
    Setup(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HoalError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HoalError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = HoalError> = std::result::Result<T, E>;

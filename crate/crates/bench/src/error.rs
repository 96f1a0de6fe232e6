use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("dataset error: {0}")]
    Data(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] reptensor::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    /// Process exit status: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Config(_) => 1,
            BenchError::Decode { .. } | BenchError::Data(_) | BenchError::Io { .. } => 2,
            BenchError::Core(e) => match e {
                reptensor::Error::Parameter(_) => 1,
                reptensor::Error::Shape(_) => 2,
                _ => 3,
            },
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Hyperparameters or arguments that violate a documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("width mismatch: model has {expected} inputs, data has {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("no estimate: {0}")]
    NoEstimate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::WidthMismatch { .. })
    }
}

use std::path::PathBuf;

use crate::record::RunRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The gradient or objective oracle returned a non-finite value.
    /// The partial trace up to (but excluding) the failing iteration is kept.
    #[error("run diverged at iteration {iteration}: {reason}")]
    Diverged {
        iteration: usize,
        reason: String,
        partial: Option<Box<RunRecord>>,
    },

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("matrix file {path}: {msg}")]
    MatrixFormat { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the estimators, samplers and data loaders.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its valid range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A covariance matrix could not be factorized.
    #[error("covariance matrix is not positive definite: {0}")]
    Factorization(String),

    /// The input admits no finite estimate (constant columns, too few
    /// distinct points, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An internal invariant of a computed object was violated.
    #[error("contract violated: {0}")]
    Contract(String),

    /// Input data could not be read or parsed.
    #[error("data error: {0}")]
    Data(String),

    /// One of the ℓ posterior draws failed; the whole estimate is aborted.
    #[error("posterior draw {index} failed: {source}")]
    Draw {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// The innermost error, looking through draw wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Draw { source, .. } => source.root(),
            e => e,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

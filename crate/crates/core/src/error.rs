use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {index} is not on the unit sphere (norm {norm})")]
    NotOnSphere { index: usize, norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("duplicate nodes {first} and {second}")]
    DuplicateNodes { first: usize, second: usize },

    #[error("degenerate node set: {0}")]
    DegenerateNodes(String),

    #[error("design infeasible: {msg} (max moment violation {max_violation:e})")]
    Infeasible { msg: String, max_violation: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("operator is degenerate: {0}")]
    DegenerateOperator(String),

    #[error("numerical method did not converge: {0}")]
    NoConvergence(String),

    #[error("training diverged at epoch {epoch} (last finite loss {last_loss})")]
    Divergence { epoch: usize, last_loss: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for configuration and I/O failures, false for numerical ones.
    pub fn is_io_or_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Format { .. } | Error::Io { .. } | Error::Verification(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

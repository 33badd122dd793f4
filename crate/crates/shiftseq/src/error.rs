use std::path::PathBuf;

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex index {index} out of range for {n} vertices")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no strongly connected graph found within {attempts} attempts")]
    ConnectivityNotAchieved { attempts: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for validation failures, 2 for
    /// runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::IndexOutOfRange { .. }
            | Error::DuplicateEdge(..)
            | Error::DimensionMismatch(_)
            | Error::InvalidParameter(_)
            | Error::Parse { .. }
            | Error::PatternMismatch(_)
            | Error::MissingFile(_) => 1,
            Error::ConnectivityNotAchieved { .. } | Error::NonFinite(_) | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

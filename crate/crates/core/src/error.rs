use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
///
/// Each variant belongs to one of three classes that map onto the CLI exit
/// codes: bad input (2), empty or degenerate data (3) and pipeline failure (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no points carry label {0}")]
    ObjectNotFound(u32),

    #[error("keypoints without votes: {0:?}")]
    MissingVotes(Vec<usize>),

    #[error("object not visible: {0}")]
    NotVisible(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error (0 is reserved for success).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Domain(_) | Error::Io { .. } | Error::Parse { .. } => 2,
            Error::Empty(_) | Error::Degenerate(_) => 3,
            Error::ObjectNotFound(_) | Error::MissingVotes(_) | Error::NotVisible(_) => 4,
        }
    }
}

use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// Malformed input file; the message names the location.
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid formula `{formula}`: {message}")]
    Formula { formula: String, message: String },
    #[error(transparent)]
    Core(#[from] linda_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }

    /// Process exit code: 3 for numerical failures, 2 for everything the
    /// user can fix by changing the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

//! Error type shared across the library.

use std::path::PathBuf;

/// Library-wide error type.
///
/// The three variants map onto the CLI's exit-code convention:
/// input/validation problems, I/O failures, and internal invariant
/// violations that indicate a bug rather than bad input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input: malformed data, broken references, bad configuration,
    /// violated preconditions. The message carries the location when one is
    /// known (file and row for CSV data, byte offset for JSON).
    #[error("{0}")]
    Invalid(String),

    /// An operating-system I/O failure while reading or writing a file.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An internal invariant was violated; this signals a bug in the
    /// library (for example a reference solver failing to converge).
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Convenience constructor for validation errors.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Convenience constructor for I/O errors tied to a path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Convenience constructor for internal invariant violations.
    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

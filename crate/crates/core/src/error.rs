//! Error types shared by the whole crate.

use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on user-supplied data was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical operation failed (singular matrix, non-finite values, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An operation was called on an object in the wrong state.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Training diverged; carries the step at which it happened.
    #[error("training failed at step {step}: {message}")]
    Training { step: usize, message: String },

    /// A referenced file does not exist.
    #[error("missing file {path} ({context})")]
    MissingFile { path: PathBuf, context: String },

    /// Shapes do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    /// A non-finite value was found where finite data is required.
    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    /// A subject label is outside the declared class set.
    #[error("unknown label {label} for subject {subject}")]
    UnknownLabel { subject: String, label: usize },

    /// A file exists but could not be parsed.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A serialized artifact has an unsupported format version.
    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: String, expected: String },

    /// An underlying I/O operation failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit status for the CLI: 1 for validation problems,
    /// 2 for runtime/numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::MissingFile { .. }
            | Error::DimensionMismatch { .. }
            | Error::NonFinite { .. }
            | Error::UnknownLabel { .. }
            | Error::Parse { .. }
            | Error::FormatVersion { .. } => 1,
            Error::Numerical(_)
            | Error::InvalidState(_)
            | Error::Training { .. }
            | Error::Io { .. } => 2,
        }
    }
}

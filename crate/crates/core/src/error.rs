//! Recoverable error types and their process exit codes.
//!
//! Programming errors (shape mismatches, stepping a finished episode,
//! sampling an empty buffer) panic instead; only conditions a user can hit
//! with bad input or an unlucky run are represented here.

use std::path::PathBuf;

/// Errors surfaced to the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad configuration: unknown key, unparsable value, or a value outside
    /// its documented range.
    #[error("config error: {0}")]
    Config(String),

    /// A non-finite value showed up in a gradient or network parameter.
    /// The offending update is rejected and training aborts.
    #[error("numerical fault: {0}")]
    Numerical(String),

    /// Malformed or truncated checkpoint / metrics / demo file.
    #[error("bad file {path}: {reason}")]
    BadFile { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 2 for bad input (configuration
    /// values or malformed files), 3 for numerical faults, 1 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::BadFile { .. } => 2,
            Error::Numerical(_) => 3,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

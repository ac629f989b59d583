//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by talkup operations.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A byte stream failed structural validation while decoding.
    #[error("corrupt stream at byte {offset}: {reason}")]
    CorruptStream { offset: usize, reason: String },

    /// A stage or operation was invoked without required configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Data-level validation failed (e.g. manifest split overlap).
    #[error("validation error: {0}")]
    Validation(String),

    /// Training produced a non-finite loss; carries a diagnostic dump.
    #[error("non-finite loss: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn corrupt(offset: usize, reason: impl Into<String>) -> Self {
        Error::CorruptStream {
            offset,
            reason: reason.into(),
        }
    }
}

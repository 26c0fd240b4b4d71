//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the lab's library and CLI layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation. Carries the offending
    /// field's name so CLI diagnostics can point at it directly.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numeric contract was violated (non-finite logits, empty support).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Training produced a non-finite state and was aborted.
    #[error("training aborted at step {step}: {message}")]
    Training { step: usize, message: String },

    /// Internal bookkeeping mismatch; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

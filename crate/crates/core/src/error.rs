use std::io;

use thiserror::Error;

/// Errors produced by the extraction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A sentence violates a structural invariant (cycles, multiple roots, ...).
    #[error("sentence {sentence}: {message}")]
    Structure { sentence: String, message: String },

    /// An argument passed to an operation is outside its domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Inconsistent configuration, model or input files.
    #[error("configuration error: {0}")]
    Config(String),

    /// A remote service could not be reached; the call may be retried.
    #[error("retryable error: {0}")]
    Retryable(String),

    /// A remote service answered with something we could not interpret.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn structure(sentence: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Structure {
            sentence: sentence.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

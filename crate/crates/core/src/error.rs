//! Crate-wide error type.
//!
//! Variants map onto the failure classes the pipeline distinguishes:
//! configuration problems, malformed input data (text or binary), and
//! numerical aborts during training.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// I/O failure with the path that caused it.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Invalid configuration or parameter (precondition violation).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed line in a text input file.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Malformed or truncated binary file; `offset` is the byte position
    /// at which decoding failed.
    #[error("{message} (at byte offset {offset})")]
    Format { message: String, offset: u64 },

    /// Semantically invalid data (unknown ids, pool violations, ...).
    #[error("{0}")]
    Data(String),

    /// Non-finite values or divergence during numerical work.
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>, offset: u64) -> Self {
        Error::Format {
            message: message.into(),
            offset,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

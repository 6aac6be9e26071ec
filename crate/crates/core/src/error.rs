use std::io;

use thiserror::Error;

/// Errors produced anywhere in the compression, encoding, and simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A PE slice needs more entries than a 16-bit pointer can address.
    #[error("capacity exceeded in PE {pe}: {entries} entries (limit {limit})")]
    Capacity {
        pe: usize,
        entries: usize,
        limit: usize,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("accumulator overflow in row {row}")]
    Overflow { row: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

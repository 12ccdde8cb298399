use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed array file: {0}")]
    Format(String),

    #[error("array payload length mismatch: expected {expected} values, found {found}")]
    Length { expected: usize, found: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("input too small: min(h, w) = {0}, need at least 8")]
    InputTooSmall(usize),

    #[error("substrate {0} is not supported here: {1}")]
    UnsupportedSubstrate(String, String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("oracle protocol error: {0}")]
    Protocol(String),

    #[error("oracle timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("oracle error: {0}")]
    Oracle(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for failures that originate on the oracle side of the boundary.
    pub fn is_oracle_failure(&self) -> bool {
        matches!(self, Error::Protocol(_) | Error::Timeout(_) | Error::Oracle(_))
    }
}

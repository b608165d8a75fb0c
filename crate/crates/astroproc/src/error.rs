//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by image operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes do not line up (kernel larger than image, mismatched buffers, ...).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A parameter is outside its documented range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A caller-side precondition was violated (non-finite pixels,
    /// marker exceeding mask, empty inputs, ...).
    #[error("contract error: {0}")]
    Contract(String),

    /// The requested computation is singular or degenerate for this input.
    #[error("singular input: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn singular(msg: impl Into<String>) -> Self {
        Error::Singular(msg.into())
    }
}

//! Library half of the pipeline CLI: raster file formats, synthetic galaxy
//! generation, and the run manifest. The `astroproc` binary is a thin
//! command layer over these pieces and the `astroproc` crate.

pub mod io;
pub mod manifest;
pub mod synth;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed raster input; `offset` is the byte position of the defect.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] astroproc::Error),

    /// Bad flag combination or out-of-range argument.
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data unusable for the requested operation.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 for usage problems, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Core(astroproc::Error::Parameter(_)) => 2,
            _ => 3,
        }
    }
}

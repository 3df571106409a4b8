use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dataset member {index}: {source}")]
    DatasetMember {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("size guard exceeded: {what} = {value} > {limit}")]
    SizeGuard { what: &'static str, value: u128, limit: u128 },

    #[error("rank-deficient system: effective rank {rank} of {cols} columns")]
    RankDeficient { rank: usize, cols: usize },

    #[error("calibration failed: no grid point reached success {target} (best observed {best})")]
    CalibrationFailed { target: f64, best: f64 },

    #[error("hardness parameter diverged: {0}")]
    Divergence(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

impl Error {
    /// True for errors caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

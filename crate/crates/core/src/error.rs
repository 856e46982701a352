use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min}, largest {max})")]
    NotPsd { min: f64, max: f64 },

    #[error("singular or degenerate matrix: {0}")]
    Singular(String),

    #[error("row {0} has no positive mass")]
    ZeroRow(usize),

    #[error("column {0} has no positive mass")]
    ZeroColumn(usize),

    #[error("all kernel affinities underflowed to zero (query too far at bandwidth {sigma})")]
    Underflow { sigma: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for errors that stem from numerical breakdown rather than bad
    /// input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPsd { .. }
                | Error::Singular(_)
                | Error::ZeroRow(_)
                | Error::ZeroColumn(_)
                | Error::Underflow { .. }
                | Error::NoConvergence { .. }
        )
    }
}

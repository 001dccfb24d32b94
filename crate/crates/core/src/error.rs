use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input or a violated precondition.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("level {level} is beyond the explicit prefix of length {len}")]
    BeyondPrefix { level: usize, len: usize },

    #[error("contraction ratio r is undefined for an explicit (non-periodic) sequence")]
    UndefinedRatio,

    #[error("shape {shape} does not exist at level {level}")]
    ShapeLevel { shape: &'static str, level: usize },

    #[error("series diverges: Re(s) = {re} is not above the abscissa {abscissa}")]
    Divergent { re: f64, abscissa: f64 },

    #[error("s = {s} is at (or numerically on) a pole; nearest lattice point {nearest}")]
    Pole { s: Complex64, nearest: Complex64 },

    #[error("requested lambda {lambda} exceeds the table range {lambda_max}")]
    OutOfRange { lambda: f64, lambda_max: f64 },

    #[error("truncation bound {achieved:e} exceeds the requested tolerance {tol:e} (level cap {level_cap})")]
    Tolerance { achieved: f64, tol: f64, level_cap: usize },

    #[error("matrix is not positive definite after shifting (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True when the error stems from invalid user input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::BeyondPrefix { .. }
                | Error::UndefinedRatio
                | Error::ShapeLevel { .. }
                | Error::Divergent { .. }
                | Error::OutOfRange { .. }
                | Error::Parse(_)
        )
    }
}

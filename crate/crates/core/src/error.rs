use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The vertical coordinate lies outside the strip where the kernel is a function.
    #[error("|s| = {s} is outside the strip |s| < {limit}")]
    StripViolation { s: f64, limit: f64 },

    #[error("time must be nonzero")]
    ZeroTime,

    /// Complex time outside the region where the continued kernel converges.
    #[error("complex time {re} + {im}i is outside the admissible domain")]
    DomainViolation { re: f64, im: f64 },

    /// Integral whose exponential envelope does not decay.
    #[error("integral diverges: envelope rate {rate} is not positive")]
    Divergent { rate: f64 },

    /// Adaptive quadrature ran out of subintervals; carries the best estimate.
    #[error("quadrature did not converge: estimate {re} + {im}i, error {error}")]
    NonConvergence { re: f64, im: f64, error: f64 },

    #[error("series budget exhausted after {terms} terms (tail estimate {tail})")]
    BudgetExhausted { terms: usize, tail: f64 },

    #[error("grid does not intersect the ball")]
    EmptyIntersection,

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use thiserror::Error;

/// Errors raised by the moment, metric and heat computations.
///
/// Hypothesis violations (even-integer orders, vanishing `S(k, alpha)`, out-of-range
/// exponents) are reported as typed variants rather than sentinel values.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter out of range: {0}")]
    Range(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}: the non-radial path is limited to d <= 3")]
    UnsupportedDimension(usize),

    #[error("divergence suspected: {0}")]
    DivergenceSuspected(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("missing oracle: {0}")]
    MissingOracle(String),

    #[error("series diverges: {0}")]
    SeriesDivergence(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed sample file at line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

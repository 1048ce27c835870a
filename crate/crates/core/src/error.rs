use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature or linear-algebra step produced a non-finite or
    /// otherwise unusable value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The harmonic part of a Riesz decomposition failed its
    /// reconstruction check.
    #[error("decomposition residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Decomposition { residual: f64, tolerance: f64 },

    #[error("solver error: {message} (condition estimate {condition:.3e})")]
    Solver { message: String, condition: f64 },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Parse { .. } | Error::Io(_))
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

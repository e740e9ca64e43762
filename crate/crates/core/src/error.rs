use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty point set")]
    EmptySet,

    #[error("parse error: {0}")]
    Parse(String),

    /// The requested quantity does not exist in this regime (zero radius,
    /// empty integration interval, integrand singular at an endpoint, ...).
    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("outside domain: {0}")]
    OutsideDomain(String),

    #[error("infinite dilatation sample encountered at {0:?}")]
    InfiniteSample(Vec<f64>),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("numerically singular jacobian at {0:?}")]
    SingularJacobian(Vec<f64>),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Mathematical degeneracy, as opposed to malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_)
                | Error::OutsideDomain(_)
                | Error::InfiniteSample(_)
                | Error::Quadrature(_)
                | Error::SingularJacobian(_)
        )
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

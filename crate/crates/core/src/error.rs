use thiserror::Error;

/// Errors raised by grid construction, transport, and the test statistics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample size {n} is too small (need at least {min})")]
    SampleTooSmall { n: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("size mismatch: expected {expected} points, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid sphere array: {0}")]
    InvalidSphere(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("observations {first} and {second} coincide")]
    DuplicatePoint { first: usize, second: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical routines themselves, as opposed to
    /// bad arguments or malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular(_) | Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

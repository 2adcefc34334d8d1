use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{n} spins exceed the dense-matrix limit of {max}")]
    TooManySpins { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not hermitian (max |M - M^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    /// An iterative fit stopped without meeting its tolerance. `best` holds
    /// the best parameters seen so far.
    #[error("fit did not converge: {message}")]
    FitFailed { message: String, best: Vec<f64> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("refusing to resume: {0}")]
    ResumeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(msg: impl std::fmt::Display) -> Self {
        Error::Parse(msg.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("maximum lag {lag} outside [1, {max}]")]
    InvalidLag { lag: usize, max: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-stationary process: {0}")]
    NonStationary(String),
    #[error("tail truncation did not reach {tol:e} within {cap} terms")]
    TruncationFailure { tol: f64, cap: usize },
    #[error("need at least {min} observations, got {got}")]
    InsufficientData { got: usize, min: usize },
    #[error("variance of coordinate {0} is not positive")]
    ZeroVariance(usize),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("root search did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("band kind mismatch: {0}")]
    KindMismatch(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("regression needs more than {needed} observations, got {got}")]
    Degenerate { got: usize, needed: usize },
    #[error("regressor covariance matrix is singular")]
    SingularSigmaX,
    #[error("series of length {len} too short for the requested lags (needs > {needed})")]
    InsufficientLength { len: usize, needed: usize },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for data and usage problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TruncationFailure { .. }
            | Error::NumericalBreakdown(_)
            | Error::NoConvergence(_)
            | Error::SingularSigmaX
            | Error::RankDeficient
            | Error::ZeroVariance(_)
            | Error::DegenerateSeries => 3,
            _ => 2,
        }
    }
}

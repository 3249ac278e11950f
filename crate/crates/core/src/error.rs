use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("overflow while {0}")]
    Overflow(&'static str),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("starting vector is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("operator is not flagged Hermitian; Lanczos mode requires it")]
    NotHermitian,

    #[error("Krylov decomposition has broken down at m = {0}; it cannot be extended")]
    ExtendAfterBreakdown(usize),

    #[error("corrected approximation needs v_(m+1), but the decomposition broke down")]
    MissingNextVector,

    #[error("step size underflow at t = {t}: dt = {dt}")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("Matrix Market parse error on line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid point count {0} must be a power of two and at least 16")]
    BadPointCount(usize),
    #[error("grid length {0} must be positive and finite")]
    BadLength(f64),
    #[error("field has {got} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains a non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("fractional order {0} outside [0, 2]")]
    BadOrder(f64),
    #[error("time {0} is outside the weight schedule domain t > 1")]
    TimeOutOfDomain(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("profile width 1/{scale} exceeds L/20 = {limit}")]
    ProfileTooWide { scale: f64, limit: f64 },
    #[error("input field is identically zero")]
    ZeroInput,
    #[error("weight has no variation (zero Fourier L1 norm of its derivative)")]
    ZeroWeight,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("non-finite solution at t = {t} (step {step})")]
    NonFinite { t: f64, step: u64 },
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("malformed records: {0}")]
    Records(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 3 for a numerical abort, 1 for I/O failure, 2 for
    /// everything caused by the inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

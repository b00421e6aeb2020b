use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pre-asymptotic regime at t = {t}: {reason}")]
    PreAsymptotic { t: f64, reason: String },

    #[error("site scan exceeded budget of {budget} sites")]
    ScanBudgetExceeded { budget: u64 },

    #[error("jump budget of {budget} exceeded at simulated time {reached} (target {target})")]
    JumpBudgetExceeded { budget: u64, reached: f64, target: f64 },

    #[error("tolerance {tol} needs {required} uniformization steps, budget is {budget}")]
    StepBudgetExceeded { tol: f64, required: u64, budget: u64 },

    #[error("monotonicity violated between grid points {i} and {j}: {a} -> {b}")]
    MonotonicityViolation { i: usize, j: usize, a: f64, b: f64 },

    #[error("window validation failed: doubling changed inner mass by {change:e} (tol {tol:e})")]
    WindowValidation { change: f64, tol: f64 },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

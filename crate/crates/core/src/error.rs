use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("eigensolver did not converge after {iterations} iterations (dim {dim})")]
    EigenNoConvergence { dim: usize, iterations: usize },

    #[error("degenerate ground state: gap {gap:e} below {tolerance:e}")]
    DegenerateGroundState { gap: f64, tolerance: f64 },

    #[error("truncation did not converge below n_fock = {cap} (last change {last_change:e})")]
    TruncationNotConverged { cap: usize, last_change: f64 },

    #[error("trace drift {drift:e} at t = {t} exceeds {limit:e}; try smaller tolerances")]
    TraceDrift { t: f64, drift: f64, limit: f64 },

    #[error("positivity violated at t = {t}: min eigenvalue {min_eigenvalue:e}")]
    Positivity { t: f64, min_eigenvalue: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("limiting cycle not converged after {iterations} iterations (residual {residual:e})")]
    CycleNotConverged { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
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

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coherent amplitude too large: |beta|^2 = {beta_sq:.3} must stay below n_cutoff/4 = {limit:.3}")]
    AmplitudeTooLarge { beta_sq: f64, limit: f64 },

    #[error("state has zero norm and cannot be normalized")]
    ZeroNorm,

    #[error("steady-state solve failed: {0}")]
    SingularSystem(String),

    #[error("integrator step size underflow at t = {t} (step {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("wavefunction norm underflow at t = {t}; reduce dt_max")]
    NormUnderflow { t: f64 },

    #[error("no trajectory records to analyse")]
    EmptyRecords,

    #[error("trajectory records do not share a time grid")]
    GridMismatch,

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("integration windows overlap")]
    OverlappingWindows,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

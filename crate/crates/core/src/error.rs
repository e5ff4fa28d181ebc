use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "Stark tone too close to a pole: |Δ_qs| = {detuning:.3} MHz, |δ_q + Δ_qs| = {to_12:.3} MHz, guard = {guard} MHz"
    )]
    PoleProximity {
        detuning: f64,
        to_12: f64,
        guard: f64,
    },

    #[error("target shift {target} MHz is unreachable at this detuning; only {achievable} shifts are possible")]
    InfeasibleShift {
        target: f64,
        achievable: &'static str,
    },

    #[error("scan cell at {shift} MHz failed: {source}")]
    ScanCell {
        shift: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("fit did not converge after {iterations} iterations (rms residual {rms_residual:.3e}, last step {last_step:.3e})")]
    NonConvergence {
        iterations: usize,
        rms_residual: f64,
        last_step: f64,
    },

    #[error("P1 = {p1} is outside (0, 1); cannot convert to T1")]
    ProbabilityDomain { p1: f64 },

    #[error("no usable samples in input")]
    Empty,

    #[error("estimator window exceeds the map: {0}")]
    WindowExceedsGrid(String),

    #[error("no grid point within {tolerance} MHz of requested frequency {requested} MHz")]
    Snapping { requested: f64, tolerance: f64 },

    #[error("input has zero variance")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("regression design matrix is singular")]
    SingularRegression,

    #[error("subset too short: {len} points per subset for k = {k}")]
    SubsetTooShort { k: usize, len: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

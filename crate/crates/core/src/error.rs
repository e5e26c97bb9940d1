use thiserror::Error;

/// Errors returned by the analysis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("hit probability {value} exceeds 1 at t = {t} s; the point-receiver model is not valid here")]
    ModelValidity { value: f64, t: f64 },

    #[error("rare-event assumption violated: lambda_e * interval = {0} (must be < 1)")]
    RareEventViolated(f64),

    #[error("truncated mass {tail:e} exceeds tolerance {tol:e} at k_max = {k_max}")]
    TailTolerance { tail: f64, tol: f64, k_max: usize },

    #[error("enumerating 2^{size} {what} exceeds the limit of 2^{limit}")]
    EnumerationTooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("loss of precision in {0}")]
    PrecisionLoss(&'static str),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("particle population exceeded the cap of {cap}")]
    PopulationCap { cap: usize },

    #[error("malformed pmf data: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Fails unless `x` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {x}")))
    }
}

/// Fails unless `x` is finite and non-negative.
pub(crate) fn require_non_negative(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {x}")))
    }
}

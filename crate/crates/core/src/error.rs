use thiserror::Error;

/// Errors produced by the model, spectral, dynamics and shock layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(&'static str),

    #[error("state leaves the simplex by {excess:e} (tolerance {tol:e})")]
    SimplexViolation { excess: f64, tol: f64 },

    #[error("`{name}` = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("baseline is not subcritical (Perron root {0} >= 1)")]
    BaselineSupercritical(f64),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("formula inapplicable: {0}")]
    FormulaInapplicable(String),

    #[error("shock amplitude {delta} does not exceed the critical amplitude {critical}")]
    BelowThreshold { delta: f64, critical: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("point is within the boundary margin of the simplex: {0}")]
    BoundaryPoint(String),

    #[error("check does not apply in this regime: {0}")]
    RegimeMismatch(String),

    #[error("invalid shock: {0}")]
    InvalidShock(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

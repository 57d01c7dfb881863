//! Error type shared across the crate.

use thiserror::Error;

pub type GeoResult<T> = Result<T, GeomError>;

#[derive(Debug, Clone, Error)]
pub enum GeomError {
    #[error("non-finite value at (t, x) = ({t}, {x:?})")]
    NonFinite { t: f64, x: Vec<f64> },

    #[error("not positive definite at (t, x) = ({t}, {x:?})")]
    NotPositiveDefinite { t: f64, x: Vec<f64> },

    #[error("asymmetry residual {residual:e} exceeds tolerance at (t, x) = ({t}, {x:?})")]
    NotSymmetric { t: f64, x: Vec<f64>, residual: f64 },

    #[error("not an immersion at (t, p) = ({t}, {x:?})")]
    NotImmersion { t: f64, x: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("integration budget exhausted at t = {t}")]
    IntegrationBudgetExhausted { t: f64 },

    #[error("blow-up at t = {t}")]
    BlowUp { t: f64 },

    #[error("stationary point on path at t = {t}")]
    StationaryPath { t: f64 },

    #[error("trajectory does not cover t = {t} (range [{lo}, {hi}])")]
    OutsideTrajectory { t: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("unknown model '{name}'; available: {available}")]
    UnknownModel { name: String, available: String },

    #[error("probe failed at eps = {eps}: {reason}")]
    ProbeFailed { eps: f64, reason: String },

    #[error("quadrature did not converge on [{a}, {b}]")]
    QuadratureFailed { a: f64, b: f64 },
}

use thiserror::Error;

/// Errors surfaced by grid construction, data validation, and the solvers.
#[derive(Debug, Error)]
pub enum HsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("compatibility violation: {0}")]
    Incompatible(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("Picard iteration failed to contract: ratio {ratio:.3} > {threshold:.3} at step {step} (horizon T = {horizon})")]
    NonContraction {
        step: usize,
        ratio: f64,
        threshold: f64,
        horizon: f64,
    },

    #[error("horizon underflow: T* = {t_star} fell below {floor} after {attempts} attempts")]
    HorizonUnderflow {
        t_star: f64,
        floor: f64,
        attempts: usize,
    },

    #[error("CFL violation in oracle: max|u| dt / dx = {cfl:.3} > {limit:.3}")]
    CflViolation { cfl: f64, limit: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HsError>;

use thiserror::Error;

/// Failures raised by the numerical model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("attitude is too close to the pitch singularity (theta = {theta} rad)")]
    SingularAttitude { theta: f64 },

    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("linear system is singular")]
    Singular,

    #[error("linear solve residual {residual:e} exceeds bound {bound:e}")]
    ResidualBound { residual: f64, bound: f64 },

    #[error("invalid added mass: {0}")]
    InvalidAddedMass(String),

    #[error("vehicle is not neutrally buoyant (weight {weight} N, buoyancy {buoyancy} N)")]
    NotNeutrallyBuoyant { weight: f64, buoyancy: f64 },

    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("trajectory grids differ: {0}")]
    GridMismatch(String),

    #[error("non-finite state at t = {t} s")]
    NonFinite { t: f64 },
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

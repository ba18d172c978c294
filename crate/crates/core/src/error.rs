use thiserror::Error;

use crate::model::SpecViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("invalid model specification: {}", join_violations(.0))]
    InvalidSpec(Vec<SpecViolation>),

    #[error("field state does not match the model: {0}")]
    FieldShapeMismatch(String),

    #[error("point (x = {x}, z = {z}) lies outside the beam cross-section")]
    OutOfDomain { x: f64, z: f64 },

    #[error("mesh needs at least {min} elements, got {got}")]
    TooFewElements { min: usize, got: usize },

    #[error("mesh does not match the model: {0}")]
    MeshSpecMismatch(String),

    #[error("unknown mechanical boundary condition `{0}`")]
    UnknownBc(String),

    #[error("electric stiffness block is singular")]
    SingularElectricBlock,

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("time-step matrix is singular: {0}")]
    SingularStepMatrix(String),

    #[error("a convergence study needs at least 3 meshes, got {0}")]
    InsufficientMeshes(usize),

    #[error("invalid study parameters: {0}")]
    InvalidStudy(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn join_violations(v: &[SpecViolation]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

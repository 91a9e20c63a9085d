use thiserror::Error;

/// Everything that can go wrong while building, evaluating or solving.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivError {
    #[error("a distribution needs at least 2 atoms, got {0}")]
    EmptySupport(usize),
    #[error("atom {index} has negative mass {value}")]
    NegativeMass { index: usize, value: f64 },
    #[error("atom {index} has non-finite mass")]
    NonFiniteMass { index: usize },
    #[error("total mass is zero")]
    ZeroTotalMass,
    #[error("mass sums to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("atom {index} has mass {value}, outside the domain of {family}")]
    DomainViolation { index: usize, value: f64, family: String },
    #[error("support sizes differ: {left} vs {right}")]
    SupportMismatch { left: usize, right: usize },
    #[error("{family} has no first-argument derivative")]
    UnsupportedDerivative { family: String },
    #[error("invalid divergence spec: {0}")]
    InvalidSpec(String),
    #[error("invalid numeric config: {0}")]
    InvalidConfig(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid constraint set: {0}")]
    InvalidConstraints(String),
    #[error("constraint set has no interior point: {0}")]
    InfeasibleConstraints(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("check {name} failed: {detail}")]
    CheckFailed { name: String, detail: String },
}

pub type Result<T> = std::result::Result<T, DivError>;

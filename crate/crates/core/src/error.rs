use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point {point:?} is within the stencil margin of the chart boundary")]
    StencilOutOfDomain { point: Vec<f64> },
    #[error("derivative order {requested} exceeds the supported maximum {max}")]
    OrderTooHigh { requested: usize, max: usize },
    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid chart domain: {0}")]
    InvalidDomain(String),
    #[error("metric is singular at the point (condition number {condition:e})")]
    MetricSingular { condition: f64 },
    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },
    #[error("instance is not a soliton at the point (residual {residual:e} > {tolerance:e})")]
    NotASoliton { residual: f64, tolerance: f64 },
    #[error("operation needs a {expected} instance")]
    WrongKind { expected: &'static str },
    #[error("alpha must be nonzero")]
    AlphaZero,
    #[error("beta-dependent denominator vanishes ({value:e})")]
    DegenerateBeta { value: f64 },
    #[error("denominator vanishes ({value:e})")]
    DegenerateDenominator { value: f64 },
    #[error("concircular factor varies by {variation:e} over the samples")]
    NonConstantFactor { variation: f64 },
    #[error("entry `{0}` is not compact")]
    NotCompact(String),
    #[error("instance is not steady (lambda = {lambda:e})")]
    NotSteady { lambda: f64 },
    #[error("grid has {nodes} nodes, at least {min} are needed")]
    GridTooCoarse { nodes: usize, min: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

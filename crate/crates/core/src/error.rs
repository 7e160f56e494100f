//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter {name}: {value} ({constraint})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("kernel is not square-integrable on the truncated domain (refinement ratio {ratio:.3})")]
    KernelNotSquareIntegrable { ratio: f64 },

    #[error("path length {got} does not match grid ({expected})")]
    PathLength { expected: usize, got: usize },

    #[error("stopping rule is unbounded; wrap it in a truncation")]
    UnboundedRule,

    #[error("stopping rule references missing source path {0}")]
    DanglingSource(usize),

    #[error("minimum-spacing violation at leg {leg}")]
    SpacingViolation { leg: usize },

    #[error("conditioning event never occurs in the sample")]
    EmptyConditioningEvent,

    #[error("empty strategy family")]
    EmptyFamily,

    #[error("map domain violation: {0}")]
    DomainViolation(String),

    #[error("map is not strictly monotone on the probed range")]
    NotMonotone,

    #[error("time change must be nondecreasing")]
    DecreasingTimeChange,

    #[error("time change value {value} exceeds the path horizon {horizon}")]
    RangeOverflow { value: f64, horizon: f64 },

    #[error("invalid scenario tree: {0}")]
    InvalidTree(String),

    #[error("certificate shape does not match the tree: {0}")]
    ShapeMismatch(String),

    #[error("insufficient paths per node: need at least {needed}, got {got}; increase the sample by a factor of about {factor}")]
    InsufficientPaths {
        needed: usize,
        got: usize,
        factor: usize,
    },

    #[error("batch shape mismatch: {0}")]
    BatchMismatch(String),

    #[error("payoff is not Lipschitz; hedging requires a bounded delta")]
    NonLipschitzPayoff,

    #[error("circulant embedding produced a negative eigenvalue ({0:.3e})")]
    EmbeddingFailure(f64),

    #[error("cholesky factorization failed for the requested covariance")]
    CholeskyFailure,
}

pub type Result<T> = std::result::Result<T, Error>;

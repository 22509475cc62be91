use thiserror::Error;

/// Errors produced by the discretization, the solvers and the front end.
#[derive(Debug, Error)]
pub enum RitzError {
    #[error("non-finite integrand value on [{lo}, {hi}]")]
    NonFiniteIntegrand { lo: f64, hi: f64 },

    #[error("non-positive stiffness entry s[{index}] = {value:e}")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("rank-one denominator 1 + gamma d^T A^-1 d = {0:e} is not positive")]
    DegenerateRankOne(f64),

    #[error("boundary constraint is degenerate: d^T A^-1 d = {0:e}")]
    DegenerateConstraint(f64),

    #[error("reduced Hessian is singular (zeta = {zeta:e})")]
    SingularReducedHessian { zeta: f64 },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("line search failed to satisfy the Wolfe conditions")]
    LineSearchFailure,

    #[error("refinement would grow the network to {requested} neurons (limit {limit})")]
    NeuronLimit { requested: usize, limit: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = RitzError> = std::result::Result<T, E>;

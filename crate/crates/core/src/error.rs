use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    #[error("operator is not forward-evaluable: {0}")]
    NotForwardEvaluable(String),

    #[error("resolvent defined only at gamma = {expected}, requested {found}")]
    GammaMismatch { expected: f64, found: f64 },

    #[error("linear system I + gamma*M is numerically singular (gamma = {gamma})")]
    SingularSystem { gamma: f64 },

    #[error("no closed-form resolvent for {0}")]
    NoClosedFormResolvent(String),

    #[error("structural invariant violated: {0}")]
    Structural(String),

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parameter outside its domain: {0}")]
    DomainError(String),

    #[error("invalid step weight alpha = {0}")]
    InvalidAlpha(f64),

    #[error("primal-dual metric requires gamma < beta (gamma = {gamma}, beta = {beta})")]
    InvalidMetric { gamma: f64, beta: f64 },

    #[error("point is not a fixed point of T (||Tz - z|| = {0:e})")]
    NotAFixedPoint(f64),

    #[error("reference point is not a primal-dual solution (defect {0:e})")]
    NotASolution(f64),

    #[error("solver state does not match method {0}")]
    StateMismatch(String),

    #[error("schema violation at `{path}`: {message}")]
    SchemaViolation { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidGraph(String),

    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("invalid sensor layout: {0}")]
    InvalidLayout(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-positive {attribute} on pipe `{edge}`")]
    NonPositiveAttribute { edge: String, attribute: &'static str },

    #[error("flow radicand {value:e} on edge {edge} is below the clamp tolerance; incidence does not match heads")]
    InconsistentIncidence { edge: usize, value: f64 },

    #[error("hydraulic solver did not converge after {iterations} iterations (worst residual {residual:e} at node `{node}`)")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        node: String,
    },

    #[error("unsatisfiable scenario: {0}")]
    Unsatisfiable(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("QP did not converge after {iterations} iterations (KKT residual {residual:e})")]
    QpNoConvergence { iterations: usize, residual: f64 },

    #[error("invalid unscented scaling: n + lambda = {0:e} must be positive")]
    InvalidScaling(f64),

    #[error("covariance is not positive semidefinite (pivot {pivot:e} after jitter {jitter:e})")]
    NotPsd { pivot: f64, jitter: f64 },

    #[error("singular innovation covariance (condition estimate {condition:e})")]
    SingularInnovation { condition: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing mandatory section [{0}]")]
    MissingSection(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("measurements: {0}")]
    Measurement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

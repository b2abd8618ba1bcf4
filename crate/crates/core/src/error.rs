use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a function, or an inadmissible cusp profile.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometric error: {0}")]
    Geometry(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("vertex budget {budget} exceeded during refinement ({vertices} vertices, {triangles} triangles, {pending} pending)")]
    Budget {
        budget: usize,
        vertices: usize,
        triangles: usize,
        pending: usize,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("Rayleigh quotient undefined: boundary norm vanishes")]
    QuotientUndefined,

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotSpd { pivot: usize, value: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("dense size {n} exceeds the cap {cap}")]
    Size { n: usize, cap: usize },

    #[error("weight error: {0}")]
    Weight(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

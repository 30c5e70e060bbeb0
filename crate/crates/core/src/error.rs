use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("kernel not differentiable at origin")]
    NotDifferentiable,

    #[error("insufficient kernel regularity for k=1: {0} kernel is only C0 at the origin")]
    InsufficientRegularity(&'static str),

    #[error("near-coincident particles {i} and {j} (distance {distance:.3e}); Gram condition estimate {condition:.3e}")]
    NearCoincident {
        i: usize,
        j: usize,
        distance: f64,
        condition: f64,
    },

    #[error("Gram matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate particle/basis geometry: {0}")]
    DegenerateGeometry(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("particle collision: particles {i} and {j} at distance {distance:.3e}")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("implicit midpoint did not converge in {iterations} iterations (residual {residual:.3e}); try a smaller dt")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("step {step} (t = {t}): {source}")]
    Step {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

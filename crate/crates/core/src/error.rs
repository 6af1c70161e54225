use thiserror::Error;

/// Errors raised by grid construction, Hodge solves, flows and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid {n_x}x{n_y}: node counts must be even and at least 8")]
    InvalidGrid { n_x: usize, n_y: usize },

    #[error("{what}: expected {expected} values, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} contains a non-finite value at node {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("operands live on different grids or time grids: {0}")]
    GridMismatch(String),

    #[error("metric is not symmetric positive definite at node {index}")]
    MetricNotSpd { index: usize },

    #[error("Poisson right-hand side has nonzero mean {mean:e}")]
    IncompatibleRhs { mean: f64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("1-form is not closed: curl defect {defect:e} exceeds {tolerance:e}")]
    NotClosed { defect: f64, tolerance: f64 },

    #[error("harmonic basis is degenerate: period determinant {det:e}")]
    DegenerateBasis { det: f64 },

    #[error("map is degenerate: {0}")]
    JacobianDegenerate(String),

    #[error("vector field is not symplectic: curl defect {defect:e} exceeds {tolerance:e}")]
    NotSymplectic { defect: f64, tolerance: f64 },

    #[error("no feasible path: best endpoint error {best_error:e} never dropped below {tolerance:e}")]
    NoFeasiblePath { best_error: f64, tolerance: f64 },

    #[error("frequency {frequency} exceeds the resolvable limit {limit} of the grid")]
    NyquistExceeded { frequency: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "nearest-point projection did not converge (residual {residual:.3e}, last iterate {last_iterate:?})"
    )]
    ProjectionDiverged {
        last_iterate: Vec<f64>,
        residual: f64,
    },

    #[error("degenerate level-set gradient |grad phi| = {0:.3e}")]
    DegenerateGradient(f64),

    #[error("point is not on the boundary (|phi|/|grad phi| = {0:.3e})")]
    NotOnBoundary(f64),

    #[error("{what} = {value} outside admissible range: {reason}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        reason: String,
    },

    #[error("asymptotic data nonpositive (v0 = {v0:.3e} at d = {d:.3e}); use a smaller h_trunc")]
    NonPositiveData { d: f64, v0: f64 },

    #[error("domain unresolved at this resolution: no interior nodes")]
    Unresolved,

    #[error("Newton iteration failed after {iterations} iterations: {reason} (residual history {history:?})")]
    NewtonFailed {
        iterations: usize,
        reason: String,
        history: Vec<f64>,
    },

    #[error("linear solver failed to converge: relative residual {0:.3e}")]
    LinearSolver(f64),

    #[error("singular denominator 2 + d w <= 0 at {count} node(s), first at {first:?}")]
    SingularDenominator { count: usize, first: Vec<f64> },

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error("strip solve failed: {0}")]
    StripSolve(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use thiserror::Error;

pub type Result<T, E = GeoError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left} vs {right} points per axis")]
    GridMismatch { left: usize, right: usize },

    #[error("field has {got} samples, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite sample at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("metric is not positive definite at node ({i}, {j})")]
    NotPositiveDefinite { i: usize, j: usize },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("evaluation error at node ({i}, {j}) = ({x:.6}, {y:.6}): {message}")]
    Eval {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        message: String,
    },

    #[error("right-hand side has nonzero mean (relative {relative:.3e})")]
    IncompatibleRhs { relative: f64 },

    #[error("solver did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("vector field is not divergence free (relative divergence {0:.3e})")]
    NotDivergenceFree(f64),

    #[error("vector field is not symplectic (relative defect {0:.3e})")]
    NotSymplectic(f64),

    #[error("1-form is not harmonic (relative defect {0:.3e})")]
    NotHarmonic(f64),

    #[error("1-form is not closed (relative defect {0:.3e})")]
    NotClosed(f64),

    #[error("CFL violation at step {step}: dt * max|X| = {courant:.4e} exceeds {limit:.4e}")]
    CflViolation {
        step: usize,
        courant: f64,
        limit: f64,
    },

    #[error("non-finite state at step {step}")]
    NanDetected { step: usize },

    #[error("bump width {eps} is under-resolved (needs at least {min:.4e})")]
    EpsTooSmall { eps: f64, min: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeoError {
    fn from(e: std::io::Error) -> Self {
        GeoError::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: deviation {deviation:e} exceeds {limit:e}")]
    NotHermitian { deviation: f64, limit: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("empty matrix")]
    Empty,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps (off-diagonal mass {off:e})")]
    NonConvergence { sweeps: usize, off: f64 },

    #[error("eigenvalue {eigenvalue:e} below domain floor {floor:e}")]
    DomainViolation { eigenvalue: f64, floor: f64 },

    #[error("matrix is not strictly positive: min eigenvalue {min_eigenvalue:e}, floor {floor:e}")]
    NotStrictlyPositive { min_eigenvalue: f64, floor: f64 },

    #[error("weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),

    #[error("representing function not finite at t = {at:e}")]
    RepresentingFunctionDomain { at: f64 },

    #[error("invalid operator mean: {0}")]
    InvalidMean(String),

    #[error("invalid positive map: {0}")]
    InvalidMap(String),

    #[error("invalid spectral bounds: {0}")]
    InvalidBounds(String),

    #[error("degenerate interval: lower and upper ratio coincide at {0}")]
    DegenerateInterval(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("instance invariant violated: {bound} (margin {margin:e})")]
    InvariantViolation { bound: String, margin: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}

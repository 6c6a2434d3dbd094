use thiserror::Error;

/// Errors produced by complex construction, homology, and the modulus solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid gluing: {0}")]
    InvalidGluing(String),
    #[error("active-cell predicate removed every top-dimensional cell")]
    EmptyComplex,
    #[error("degree {degree} out of range for a complex of dimension {dimension}")]
    DegreeOutOfRange { degree: usize, dimension: usize },
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("coboundary of a top-degree cochain is undefined")]
    TopDegree,
    #[error("class is torsion (or zero) and has no admissible forms")]
    TorsionClass,
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operation requires a fully periodic complex")]
    UnsupportedBoundary,
    #[error("homology pairing matrix is singular")]
    SingularPairing,
    #[error("no representative of the class exists in the search window")]
    Disconnected,
    #[error("unsupported class: {0}")]
    UnsupportedClass(String),
    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("integer overflow during exact elimination")]
    OverflowDetected,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

use crate::maps::DensityMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("Hilbert dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("matrix is not Hermitian: deviation {deviation:e} > tolerance {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not unitary: deviation {deviation:e} > tolerance {tolerance:e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("state is not strictly positive: smallest eigenvalue {min_eigenvalue:e} <= {tolerance:e}")]
    SingularState { min_eigenvalue: f64, tolerance: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("map is not trace preserving: deviation {deviation:e} > tolerance {tolerance:e}")]
    NotTracePreserving { deviation: f64, tolerance: f64 },

    #[error("operator index {index} out of range for a map with {len} operators")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("branch probability {probability:e} is below the pruning threshold {tolerance:e}")]
    ZeroProbabilityBranch { probability: f64, tolerance: f64 },

    #[error("probability {value:e} lies outside [0, 1] beyond tolerance; the map is not CPTP")]
    ProbabilityOutOfRange { value: f64 },

    #[error("invariant state is not unique: fixed-point subspace has dimension {dimension}")]
    NonUniqueInvariantState {
        dimension: usize,
        /// The maximally mixed state, offered when the map is unital.
        candidate: Option<Box<DensityMatrix>>,
    },

    #[error("state is not a fixed point of the map: residual {residual:e} > tolerance {tolerance:e}")]
    NotFixedPoint { residual: f64, tolerance: f64 },

    #[error("Kraus operator {operator} mixes distinct potential gaps {gaps:?}")]
    MixedPotentialOperator { operator: usize, gaps: Vec<f64> },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration needs up to {branches} branches, above the cap {cap}")]
    EnumerationTooLarge { branches: f64, cap: f64 },

    #[error(
        "absolute continuity violated for trajectory {trajectory}: forward probability {forward:e}, reverse probability {reverse:e}"
    )]
    AbsoluteContinuityViolation {
        trajectory: String,
        forward: f64,
        reverse: f64,
    },

    #[error("operation requires {expected} boundary conditions")]
    BoundaryModeMismatch { expected: &'static str },

    #[error("iterative solver did not converge: {0}")]
    NoConvergence(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

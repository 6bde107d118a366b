use thiserror::Error;

/// Errors raised by measure construction, transform evaluation and the
/// spectral checks built on top of them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not expansive: eigenvalue modulus {modulus} does not exceed 1 + {margin}")]
    NonExpansive { modulus: f64, margin: f64 },

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("digits {0} and {1} coincide")]
    DuplicateDigits(usize, usize),

    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),

    #[error("frequencies {0} and {1} coincide")]
    DuplicateFrequencies(usize, usize),

    #[error("bad intervals: {0}")]
    BadIntervals(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("no contraction estimate below 1 (best factor {factor})")]
    NoConvergence { factor: f64 },

    #[error("tolerance {tol} needs more than {cap} product factors")]
    TolUnreachable { tol: f64, cap: usize },

    #[error("frequency set expands to {size} elements, cap is {cap}")]
    ExpansionCap { size: u128, cap: usize },

    #[error("level {level} exceeds cap {cap}")]
    LevelCap { level: u32, cap: u32 },

    #[error("size mismatch: {points} points but {frequencies} frequencies")]
    SizeMismatch { points: usize, frequencies: usize },

    #[error("search space is empty")]
    SearchSpaceEmpty,

    #[error("search exceeded its budget after {nodes} nodes")]
    Timeout { nodes: u64 },

    #[error("not a spectral pair (max column inner product {defect:e})")]
    NotSpectralPair { defect: f64 },

    #[error("degenerate eigenvalues (gap {gap:e})")]
    DegenerateEigenvalues { gap: f64 },

    #[error("bound {bound} admits {candidates} representatives for coordinate {coordinate} of eigenvector {index}")]
    BoundTooLoose {
        bound: f64,
        index: usize,
        coordinate: usize,
        candidates: usize,
    },

    #[error("digit weights are not equal")]
    UnequalWeights,

    #[error("{0} is not a certified zero")]
    NotAZero(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol))
    }
}

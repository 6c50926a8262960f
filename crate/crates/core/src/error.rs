use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("state is not faithful (smallest eigenvalue {0:.3e})")]
    NotFaithful(f64),

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid probability table: {0}")]
    InvalidExperiment(String),

    #[error("invalid simplex point: {0}")]
    InvalidSimplexPoint(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("unknown parameter label `{0}`")]
    UnknownLabel(String),

    #[error("parameter sets differ")]
    MismatchedParameters,

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("invalid subalgebra basis: {0}")]
    InvalidBasis(String),

    #[error("invalid block structure: {0}")]
    InvalidBlocks(String),

    #[error("invalid operator-monotone function: {0}")]
    InvalidMonotoneFunction(String),

    #[error("numerical fault: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

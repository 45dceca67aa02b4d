use thiserror::Error;

/// Errors raised by the geometric and lattice operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive-definite")]
    NotPositiveDefinite,

    #[error("determinant {0} is not 1 within tolerance")]
    NotNormalized(f64),

    #[error("integer matrix has determinant {0}, expected +1 or -1")]
    NotUnimodular(String),

    #[error("vectors are linearly dependent")]
    DependentVectors,

    #[error("multivector is zero")]
    ZeroMultiVector,

    #[error("rank {rank} is outside 0..={dim}")]
    RankOutOfRange { rank: usize, dim: usize },

    #[error("sublattice must satisfy 0 < rank < {dim}, got rank {rank}")]
    NotProper { rank: usize, dim: usize },

    #[error("expected a strict containment of sublattices")]
    NotStrictContainment,

    #[error("automorphism does not stabilize the sublattice")]
    NotStabilizing,

    #[error("integer entry does not fit in 64 bits")]
    IntegerOverflow,

    #[error("enumeration could not be certified: {0}")]
    Uncertified(String),

    #[error("active sublattices do not form a chain")]
    ChainViolation,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

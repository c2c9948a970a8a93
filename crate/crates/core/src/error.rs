use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not skew-Hermitian (residual {residual:.3e})")]
    NotSkewHermitian { residual: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("spectrum values must be pairwise distinct (repeated value {0})")]
    DuplicateSpectrum(f64),

    #[error("largest block {largest} exceeds the sum {rest} of the others; use the reduction path")]
    DominanceViolated { largest: usize, rest: usize },

    #[error("coefficient for simple root ({0}, {1}) is zero")]
    ZeroCoefficient(usize, usize),

    #[error("the two forms are linearly dependent")]
    DependentPencil,

    #[error("no sample landed in the regular set")]
    NoRegularSamples,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("flow left its space at t = {time}: residual {residual:.3e}")]
    ResidualBlowup { time: f64, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

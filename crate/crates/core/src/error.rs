use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left_rows}x{left_cols} is incompatible with {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid matrix data: {0}")]
    InvalidMatrix(String),

    #[error("not unitary: ||U U^dagger - I||_max = {defect:e}")]
    NotUnitary { defect: f64 },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("permutation size mismatch: {0} vs {1}")]
    PermutationSizeMismatch(usize, usize),

    #[error("not a permutation of 0..{size}: {images:?}")]
    InvalidPermutation { size: usize, images: Vec<usize> },

    #[error("S_{k} has {k}! elements; enumeration is limited to k <= {max}")]
    FactorialGuard { k: usize, max: usize },

    #[error(
        "Gram matrix for k = {k} at d = {d} is singular: its rank is below k! because \
         permutation operators on (C^d)^(tensor k) are linearly dependent when d < k"
    )]
    SingularGram { k: usize, d: usize },

    #[error("index tuple has length {got}, expected {expected}")]
    TupleLength { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {d}")]
    IndexOutOfRange { index: usize, d: usize },

    #[error("qubit count must be even and at most {max}, got {n}")]
    InvalidQubitCount { n: usize, max: usize },

    #[error("{what} must be at least {min}, got {got}")]
    TooFew {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("POVM is empty")]
    EmptyPovm,

    #[error("POVM elements have mixed dimensions: {0:?}")]
    MixedPovmDimensions(Vec<usize>),

    #[error("POVM at transcript prefix {prefix:?} violates completeness (defect {defect:e})")]
    IncompletePovm { prefix: Vec<usize>, defect: f64 },

    #[error("strategy dimension {strategy} does not match {other} ({what})")]
    StrategyDimension {
        strategy: usize,
        other: usize,
        what: &'static str,
    },

    #[error("time-ordered strategy emitted an inverse query at transcript prefix {0:?}")]
    InverseInTimeOrdered(Vec<usize>),

    #[error("transcript space exceeds the exact-enumeration cap of {cap} leaves")]
    TranscriptCap { cap: usize },

    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
}

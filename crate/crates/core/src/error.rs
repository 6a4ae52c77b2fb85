use std::io;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("atom {index} is not unit norm (norm = {norm})")]
    NonUnitAtom { index: usize, norm: f64 },
    #[error("need at least {needed} nonzero samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("training data is all zero")]
    ZeroData,
    #[error("clusterings differ in size: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("sample set is empty")]
    EmptySamples,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid atom count: {0}")]
    InvalidK(String),
    #[error("variance must be positive, got {0}")]
    InvalidVariance(f64),
    #[error("subset size {subset} exceeds training set size {total}")]
    SubsetTooLarge { subset: usize, total: usize },
    #[error("code does not match dictionary: {0}")]
    DictMismatch(String),
    #[error("image {width}x{height} is too small for {side}x{side} patches")]
    ImageTooSmall { width: usize, height: usize, side: usize },
    #[error("patches do not tile the {width}x{height} image exactly")]
    IncompleteTiling { width: usize, height: usize },
    #[error("dictionary shapes differ: {0}")]
    ShapeMismatch(String),
    #[error("affinity graph has no edges")]
    DegenerateGraph,
    #[error("code matrix is empty")]
    EmptyCodes,
    #[error("training set for the classifier is empty")]
    EmptyTrainSet,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Whether the failure is numerical (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroMatrix | Error::NotPositiveDefinite | Error::DegenerateGraph
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

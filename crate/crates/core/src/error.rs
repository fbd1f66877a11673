use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant carries a stable short code (see [`Error::code`]) so that the
/// CLI and JSON reports can refer to failures without matching on messages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no score samples were supplied")]
    NoSamples,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("score sample contains a non-finite entry")]
    NonFinite,
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("direction is not unit length (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("index {index} out of range for dimension {dim}")]
    BadIndex { index: usize, dim: usize },
    #[error("row {0} has (numerically) zero norm")]
    ZeroRow(usize),
    #[error("observable subspace is empty")]
    NoObservableSubspace,
    #[error("index set must be a nonempty proper subset")]
    DegeneratePartition,
    #[error("critical block has zero trace")]
    DegenerateCriticalBlock,
    #[error("parameter {index} = {value} outside [{lo}, {hi}]")]
    PhiOutOfBounds { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("search distribution collapsed")]
    CollapsedSearch,
    #[error("prior covariance is not positive definite")]
    BadPrior,
    #[error("design horizon has zero steps")]
    EmptyHorizon,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable kebab-case identifier for the failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NoSamples => "no-samples",
            Error::DimMismatch { .. } => "dim-mismatch",
            Error::NonFinite => "non-finite",
            Error::NotPsd { .. } => "not-psd",
            Error::NotNormalized { .. } => "not-normalized",
            Error::BadIndex { .. } => "bad-index",
            Error::ZeroRow(_) => "zero-row",
            Error::NoObservableSubspace => "no-observable-subspace",
            Error::DegeneratePartition => "degenerate-partition",
            Error::DegenerateCriticalBlock => "degenerate-critical-block",
            Error::PhiOutOfBounds { .. } => "phi-out-of-bounds",
            Error::CollapsedSearch => "collapsed-search",
            Error::BadPrior => "bad-prior",
            Error::EmptyHorizon => "empty-horizon",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Failures while building or loading a [`crate::contexts::ContextSet`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContextError {
    #[error("context matrix is empty")]
    Empty,

    #[error("context matrix has numerical rank {rank} < dimension {dim}")]
    RankDeficient { rank: usize, dim: usize },

    #[error("context for arm {arm} has norm {norm} > 1")]
    NormViolation { arm: usize, norm: f64 },

    #[error("row {row} has {found} columns, expected {expected}")]
    DimensionMismatch {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("failed to parse value {value:?} at row {row}: {reason}")]
    Parse {
        row: usize,
        value: String,
        reason: String,
    },

    #[error("io error reading {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvironmentError {
    #[error("parameter matrix has {found} rows, expected dimension {expected}")]
    ThetaShape { found: usize, expected: usize },

    #[error("objective {objective} has norm {norm} exceeding theta_max {theta_max}")]
    ThetaNorm {
        objective: usize,
        norm: f64,
        theta_max: f64,
    },

    #[error("noise correlation matrix is invalid: {0}")]
    NoiseCorrelation(String),

    #[error("sigma must be finite and nonnegative, got {0}")]
    Sigma(f64),

    #[error("reward component {0} has zero variance")]
    DegenerateColumn(usize),

    #[error("cannot form {clusters} clusters from {rows} rows")]
    TooFewRows { rows: usize, clusters: usize },

    #[error("reward table is empty or ragged")]
    BadTable,

    #[error("means table must be K x L with K >= 1 and L >= 1")]
    BadMeans,

    #[error(transparent)]
    Context(#[from] ContextError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("no stored exploration sample for arm {0}")]
    NoExplorationSample(usize),

    #[error("gram matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("reward vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("means table is empty")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("MultiPFI requires Euclidean-basis contexts")]
    NotMab,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

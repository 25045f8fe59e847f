use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series must contain at least one value")]
    EmptySeries,
    #[error("value at index {0} is not finite")]
    NonFiniteValue(usize),
    #[error("frequency must be >= 1, got {0}")]
    InvalidFrequency(usize),
    #[error("operation requires a complete series but {count} value(s) are missing")]
    MissingValuesPresent { count: usize },
    #[error("lag {lag} out of range for a series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("frequency {0} is too low for a seasonal decomposition (need >= 2)")]
    FrequencyTooLow(usize),
    #[error("series of length {len} is too short (need at least {required})")]
    SeriesTooShort { len: usize, required: usize },
    #[error("local regression neighborhood of {points} points is too small for degree {degree}")]
    NeighborhoodTooSmall { points: usize, degree: usize },
    #[error("x values must be strictly increasing (violated at position {0})")]
    NonIncreasingX(usize),
    #[error("loess degree must be 1 or 2, got {0}")]
    InvalidDegree(usize),
    #[error("input already contains {count} missing value(s)")]
    AlreadyMissing { count: usize },
    #[error("rate must be a nonnegative finite number, got {0}")]
    NegativeRate(f64),
    #[error("every value is missing")]
    AllMissing,
    #[error("seasonal phase {phase} has no observed values")]
    EmptyPhase { phase: usize },
    #[error("innovation variance {variance} at time {time} is not positive")]
    DegenerateInnovation { time: usize, variance: f64 },
    #[error("model dimensions are inconsistent: {0}")]
    DimensionMismatch(String),
    #[error("covariance matrix {0} is not symmetric positive semi-definite")]
    NotPositiveSemiDefinite(&'static str),
    #[error("likelihood optimization failed: {0}")]
    OptimizationFailed(String),
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("index set is empty")]
    EmptyIndexSet,
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("truth value at index {0} is zero")]
    ZeroTruthValue(usize),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("dataset `{0}` is not complete")]
    IncompleteDataset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no plottable records (all metrics are NaN)")]
    NoPlottableRecords,
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::DegenerateInnovation { .. }
                | Error::OptimizationFailed(_)
                | Error::NotPositiveSemiDefinite(_)
                | Error::DimensionMismatch(_)
        )
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid dimensions {width}x{height} with cell size {cell_size_m}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        cell_size_m: f64,
    },
    #[error("activity index {index} out of range for vocabulary of {len}")]
    ActivityOutOfRange { index: usize, len: usize },
    #[error("cell ({x}, {y}) outside {width}x{height} grid")]
    CellOutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("invalid value {value}: {reason}")]
    InvalidValue { value: f64, reason: &'static str },
    #[error("invalid vocabulary: {0}")]
    InvalidVocabulary(String),
    #[error("scenes do not share an activity vocabulary ({first} vs {other})")]
    VocabularyMismatch { first: String, other: String },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("no consensus: best plane has {inliers} inliers, {required} required")]
    NoConsensus { inliers: usize, required: usize },
    #[error("planes are {angle_deg:.3} degrees apart, tolerance is {tolerance_deg} degrees")]
    NotParallel { angle_deg: f64, tolerance_deg: f64 },
    #[error("gram matrix with {rows} rows exceeds the dense cap of {cap}; set a sparsification threshold")]
    GramTooLarge { rows: usize, cap: usize },
    #[error("category index {index} out of range for {len} categories")]
    CategoryOutOfRange { index: usize, len: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("infeasible layout after {attempts} attempts: {reason}")]
    InfeasibleLayout { attempts: usize, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported schema version {found:?}, expected {expected:?}")]
    SchemaVersion {
        path: String,
        found: String,
        expected: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(value: f64, reason: &'static str) -> Self {
        Error::InvalidValue { value, reason }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("insufficient variance: covariance rank is below {required}")]
    InsufficientVariance { required: usize },

    #[error("insufficient samples: need at least {required}, got {got}")]
    InsufficientSamples { required: usize, got: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration {config} has no training data and no smoothing prior")]
    UnknownRow { config: usize },

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}, column {column}: value {value} outside [0, 1]")]
    Range {
        row: usize,
        column: String,
        value: f64,
    },

    #[error("duplicate key: {0}")]
    DuplicateKey(String),

    #[error("unknown entity: {0}")]
    UnknownEntity(String),

    #[error("entity {0} has no views")]
    MissingViews(String),

    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or out-of-contract input, as
    /// opposed to I/O failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::File { source, .. } => source.is_validation(),
            Error::Io(_) => false,
            _ => true,
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Error {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("non-finite value in {what} at row {row}, column {column}")]
    NonFiniteCell {
        what: &'static str,
        row: usize,
        column: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular design matrix: columns {columns:?} are linearly dependent on earlier columns")]
    Singular { columns: Vec<String> },

    #[error("target values have zero variance; R² is undefined")]
    DegenerateTargets,

    #[error("feature column {column} ({name}) has zero variance")]
    DegenerateFeature { column: usize, name: String },

    #[error("target sum is numerically zero; relative total error is undefined")]
    UndefinedDenominator,

    #[error("target at index {index} is zero; relative systematic error is undefined")]
    ZeroTarget { index: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    TrainingDiverged { epoch: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Bounds(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: missing column {column}")]
    MissingColumn { path: PathBuf, column: String },

    #[error("expected {expected} rows, loaded {found}")]
    RowCount { expected: usize, found: usize },

    #[error("cache integrity check failed for {path}: {message}")]
    Integrity { path: PathBuf, message: String },

    #[error("{failed} of {total} trials failed")]
    TrialsFailed { failed: usize, total: usize },

    #[error("malformed model document: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

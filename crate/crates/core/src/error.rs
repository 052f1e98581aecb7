use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("timestamp decreases at row {row}")]
    TimestampOrderViolation { row: usize },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("session too short: duration {duration}s does not exceed twice the {margin}s margin")]
    SessionTooShort { duration: f64, margin: f64 },

    #[error("invalid sample at index {index}: {reason}")]
    InvalidSample { index: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("window too short: {len} samples, need at least 2")]
    WindowTooShort { len: usize },

    #[error("non-finite feature at index {index}")]
    NonFiniteFeature { index: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("model does not match extractor output: {0}")]
    ModelDimensionMismatch(String),

    #[error("unsupported model version `{0}`")]
    UnsupportedVersion(String),

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("a forest needs at least one tree")]
    EmptyForest,

    #[error("leave-one-out needs at least two participants")]
    SingleParticipant,

    #[error("length mismatch: {predictions} predictions vs {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

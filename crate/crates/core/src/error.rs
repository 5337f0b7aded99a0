use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("insufficient length: need at least {needed} bits, have {have}")]
    InsufficientLength { needed: usize, have: usize },

    #[error("timestamps are not strictly increasing at index {index}")]
    Ordering { index: usize },

    #[error("no intervals survive truncation at t0 = {t0:e} s")]
    EmptyAfterTruncation { t0: f64 },

    #[error("format error at byte offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("length mismatch: header declares {declared} bits, payload has {payload_bytes} bytes (expected {expected_bytes})")]
    LengthMismatch {
        declared: usize,
        payload_bytes: usize,
        expected_bytes: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("timestamps must be strictly increasing ({earlier} >= {later})")]
    NonIncreasingTime { earlier: f64, later: f64 },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("empty window: compression rate is undefined")]
    EmptyWindow,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("windows and reports are misaligned: {0}")]
    Alignment(String),

    #[error("model head mismatch: expected {expected}, found {found}")]
    HeadMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

use std::path::PathBuf;

/// Errors raised by the dispatch core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid config key `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("missing required config key `{0}`")]
    MissingConfigKey(String),

    #[error("non-finite coordinate in {0}")]
    NonFiniteCoordinate(&'static str),

    #[error("invalid dispatch: {0}")]
    InvalidDispatch(String),

    #[error("simulation clock cannot advance past slot {0}")]
    EpisodeOver(usize),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("stale activation cache: {0}")]
    StaleCache(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no completed or expired orders to score")]
    NoCompletedOrders,

    #[error("{path}:{line}: {reason}")]
    Data { path: PathBuf, line: u64, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, line: u64, reason: impl Into<String>) -> Self {
        Error::Data { path: path.into(), line, reason: reason.into() }
    }

    /// Whether the error originates from malformed input data rather than a config mistake or a
    /// runtime failure.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Data { .. } | Error::InvalidScenario(_) | Error::NoCompletedOrders | Error::Io { .. } | Error::Json(_)
        )
    }

    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidConfig { .. } | Error::MissingConfigKey(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

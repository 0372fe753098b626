use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// A state vector picked up a NaN or infinity.
    #[error("state corruption: {0}")]
    StateCorruption(String),

    /// Caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Repulsive potential evaluated at zero obstacle distance.
    #[error("contact with obstacle (distance {0})")]
    Contact(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("filter divergence: {0}")]
    FilterDivergence(String),

    /// A TD3 update produced a non-finite loss.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// An environment step failed during training; carries the partial episode.
    #[error("episode aborted at step {step}: {source}")]
    EpisodeAborted {
        step: u64,
        #[source]
        source: Box<Error>,
        trace: Box<crate::environment::trace::Trace>,
    },

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

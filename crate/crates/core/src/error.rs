//! Error type shared across the engine.

use thiserror::Error;

/// All failure modes of the engine, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad field value, unknown key, unusable grid).
    #[error("config error: {0}")]
    Config(String),

    /// A file could not be decoded (bad magic, truncated data, malformed line).
    #[error("{path}: parse error: {msg}")]
    Parse { path: String, msg: String },

    /// Decoded data violates a stream invariant; `index` names the offending record.
    #[error("validation error at record {index}: {msg}")]
    Validation { index: usize, msg: String },

    /// An index or shift fell outside the stream.
    #[error("range error: {0}")]
    Range(String),

    /// A caller broke an operation's contract (shape mismatch, bad counts).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested combination has no closed form or implementation.
    #[error("not implemented: {0}")]
    NotImplemented(String),

    /// Sampling was requested from a buffer with no entries.
    #[error("cannot sample from an empty buffer")]
    EmptyBuffer,

    /// Prediction was requested from a memory with no stored vectors.
    #[error("cannot predict from an empty memory")]
    EmptyMemory,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A harness step failed; wraps the underlying error with the step index.
    #[error("run failed at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 2 config, 3 data, 4 runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. } | Error::Validation { .. } | Error::Io { .. } => 3,
            Error::AtStep { source, .. } => source.exit_code(),
            _ => 4,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            msg: msg.into(),
        }
    }

    pub(crate) fn at_step(step: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::AtStep {
            step,
            source: Box::new(source),
        }
    }
}

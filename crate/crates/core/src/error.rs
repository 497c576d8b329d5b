use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure category. The CLI maps these onto its exit codes and the
/// C bindings onto their status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Model,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("insufficient candidates: need at least {needed}, got {got}")]
    InsufficientCandidates { needed: usize, got: usize },

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error("schema mismatch: model expects {expected}, got {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: non-monotonic timestamp")]
    NonMonotonic { path: PathBuf, line: usize },

    #[error("missing sidecar metadata {0}")]
    MissingSidecar(PathBuf),

    #[error("unsupported model version: {0}")]
    ModelVersion(String),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::DegenerateLabels
            | Error::SchemaMismatch { .. }
            | Error::ModelVersion(_)
            | Error::ModelFormat(_) => ErrorKind::Model,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

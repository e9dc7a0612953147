use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{what} {id:?} not found")]
    NotFound { what: &'static str, id: String },

    #[error("{0}")]
    Conflict(String),

    #[error("{0}")]
    Validation(String),

    #[error("sessions are incomplete; missing decisions: {missing:?}")]
    Incomplete { missing: Vec<String> },

    #[error("sessions cover different tweet sets")]
    CorpusMismatch,

    #[error("storage error on {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("corrupt log {path} line {line}: {message}")]
    CorruptLog { path: PathBuf, line: usize, message: String },

    #[error(transparent)]
    Core(#[from] arsid_core::Error),
}

impl AnnotationError {
    /// Stable machine-readable code used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            AnnotationError::NotFound { .. } => "not_found",
            AnnotationError::Conflict(_) => "conflict",
            AnnotationError::Validation(_) => "validation",
            AnnotationError::Incomplete { .. } => "incomplete",
            AnnotationError::CorpusMismatch => "corpus_mismatch",
            AnnotationError::Storage { .. } | AnnotationError::CorruptLog { .. } => "storage",
            AnnotationError::Core(_) => "invalid",
        }
    }

    pub(crate) fn storage(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AnnotationError::Storage {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = AnnotationError> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid n-gram range [{low}, {high}]: need 1 <= low <= high")]
    InvalidRange { low: usize, high: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training data must contain both classes")]
    SingleClass,

    #[error("dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate label distribution: expected agreement is 1 but observed agreement is {observed}")]
    DegenerateDistribution { observed: f64 },

    #[error("id sets differ; only in predictions: {only_left:?}; only in gold: {only_right:?}")]
    IdMismatch {
        only_left: Vec<String>,
        only_right: Vec<String>,
    },

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("svm did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        /// Best iterate reached before giving up.
        best: Box<crate::classifiers::svm::SvmModel>,
    },

    #[error("fold {fold} has no samples of class {class}; try fewer folds")]
    FoldMissingClass { fold: usize, class: u8 },

    #[error("unlabeled tweet: {0}")]
    Unlabeled(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

//! Maps errors to process exit codes.

use std::fmt;
use std::process::ExitCode;

use arsid_annotation::AnnotationError;
use arsid_core::Error as CoreError;

/// Why a command stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad flags or configuration.
    Usage,
    /// Input files are missing, malformed or unsuitable.
    Data,
    /// The computation itself failed, or outputs could not be written.
    Run,
}

impl Kind {
    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Kind::Usage => 1,
            Kind::Data => 2,
            Kind::Run => 3,
        })
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn classify(e: &CoreError) -> Kind {
    match e {
        CoreError::Config(_) | CoreError::InvalidArgument(_) | CoreError::InvalidRange { .. } => Kind::Usage,
        CoreError::NotConverged { .. } => Kind::Run,
        CoreError::Io { .. }
        | CoreError::Parse { .. }
        | CoreError::Empty(_)
        | CoreError::SingleClass
        | CoreError::DimensionMismatch { .. }
        | CoreError::DegenerateDistribution { .. }
        | CoreError::IdMismatch { .. }
        | CoreError::DuplicateId(_)
        | CoreError::FoldMissingClass { .. }
        | CoreError::Unlabeled(_)
        | CoreError::Json(_) => Kind::Data,
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Failure {
            kind: classify(&e),
            error: e.into(),
        }
    }
}

impl From<AnnotationError> for Failure {
    fn from(e: AnnotationError) -> Self {
        let kind = match &e {
            AnnotationError::Core(c) => classify(c),
            AnnotationError::Storage { .. } => Kind::Run,
            _ => Kind::Data,
        };
        Failure { kind, error: e.into() }
    }
}

/// Attaches an explicit kind to any error.
pub trait Classify<T> {
    fn or_fail(self, kind: Kind) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_fail(self, kind: Kind) -> CmdResult<T> {
        self.map_err(|e| Failure { kind, error: e.into() })
    }
}

pub fn fail<T>(kind: Kind, msg: impl fmt::Display) -> CmdResult<T> {
    Err(Failure {
        kind,
        error: anyhow::anyhow!("{msg}"),
    })
}

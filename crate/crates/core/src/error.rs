use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("text contains no words")]
    EmptyText,

    #[error("invalid word {0:?}: contains no letters")]
    InvalidWord(String),

    #[error("invalid word list: {0}")]
    InvalidWordList(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid candidate pool: {0}")]
    InvalidPool(String),

    #[error("missing field `{field}` in document {document:?}")]
    MissingField { field: String, document: String },

    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { id: String, line: usize },

    #[error("line {line}: document {id:?} has no abstract")]
    MissingAbstract { id: String, line: usize },

    /// Wraps an error raised while validating one line of an input file.
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scorer {scorer:?}: transport error: {message}")]
    Transport { scorer: String, message: String },

    #[error("scorer {scorer:?}: no response within {timeout:?}")]
    Timeout { scorer: String, timeout: Duration },

    #[error("scorer {scorer:?}: protocol error: {message}")]
    Protocol { scorer: String, message: String },

    /// The scorer answered a request with an error response.
    #[error("scorer {scorer:?} failed on {item}: {message}")]
    Scorer {
        scorer: String,
        item: String,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error classes; the CLI maps each to a stable exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Scorer,
    Io,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_line(line: usize, source: Error) -> Self {
        Error::AtLine {
            line,
            source: Box::new(source),
        }
    }

    /// Stable, machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyText => "EmptyText",
            Error::InvalidWord(_) => "InvalidWord",
            Error::InvalidWordList(_) => "InvalidWordList",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidPool(_) => "InvalidPool",
            Error::MissingField { .. } => "MissingField",
            Error::MalformedRecord { .. } => "MalformedRecord",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::MissingAbstract { .. } => "MissingAbstract",
            Error::AtLine { source, .. } => source.kind(),
            Error::Transport { .. } => "TransportError",
            Error::Timeout { .. } => "TimeoutError",
            Error::Protocol { .. } => "ProtocolError",
            Error::Scorer { .. } => "ScorerError",
            Error::Io { .. } => "IoError",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::AtLine { source, .. } => source.class(),
            Error::Transport { .. }
            | Error::Timeout { .. }
            | Error::Protocol { .. }
            | Error::Scorer { .. } => ErrorClass::Scorer,
            Error::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    /// True for failures that mean a scorer could not be reached at all.
    pub fn is_unavailable(&self) -> bool {
        matches!(self, Error::Transport { .. } | Error::Timeout { .. })
    }
}

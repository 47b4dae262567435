use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("title is empty after canonicalization: {0:?}")]
    EmptyTitle(String),

    #[error("{file}:{line}: malformed row: {reason}")]
    MalformedRow {
        file: String,
        line: usize,
        reason: String,
    },

    #[error("link target {0:?} cannot be canonicalized")]
    UnresolvableTarget(String),

    #[error("no candidate entities for {0:?}")]
    NoCandidates(String),

    #[error("training for {target:?} needs at least two populated classes, found {populated}")]
    DegenerateTraining { target: String, populated: usize },

    #[error("neither a model nor a back-off candidate is available for {0:?}")]
    NoAnswer(String),

    #[error("mention {0:?} does not occur in the document")]
    MentionNotFound(String),

    #[error("invalid xml: {0}")]
    Xml(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn malformed(file: &str, line: usize, reason: impl Into<String>) -> Self {
        Error::MalformedRow {
            file: file.to_string(),
            line,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input data rather than I/O failures.
    pub fn is_schema_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

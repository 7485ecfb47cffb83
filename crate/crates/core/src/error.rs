use std::path::PathBuf;

use crate::corpus::{Field, TokenKind};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {error}", path.display())]
    Io { path: PathBuf, error: std::io::Error },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate doc_id {0:?}")]
    DuplicateDocument(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("unknown doc_id {0:?}")]
    UnknownDocument(String),

    #[error("unknown field {0:?}")]
    UnknownField(String),

    #[error("no background model for {field} {kind} tokens")]
    NoBackgroundModel { field: Field, kind: TokenKind },

    #[error("unknown type {0:?}")]
    UnknownType(String),

    #[error("invalid type hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("empty query {0:?}")]
    EmptyQuery(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("empty pool")]
    EmptyPool,

    #[error("document {0:?} is missing from the reference ranking")]
    MissingFromReference(String),

    #[error("index format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, error: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            error,
        }
    }

    pub(crate) fn parse(line: usize, message: impl ToString) -> Self {
        Error::Parse {
            line,
            message: message.to_string(),
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A character (by char index into the tokenized text) that matches no
    /// dictionary symbol or alias.
    #[error("unknown phonetic symbol {found:?} at position {position}")]
    UnknownSymbol { position: usize, found: String },

    #[error("empty phonetic input")]
    EmptyInput,

    #[error("malformed dictionary line {line}: {reason}")]
    Dictionary { line: usize, reason: String },

    #[error("malformed lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("feature is all zero")]
    ZeroVector,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("checkpoint format mismatch: {0}")]
    FormatVersionMismatch(String),

    #[error("dataset line {line}: {reason}")]
    Dataset { line: usize, reason: String },

    #[error("record {id}: {source}")]
    Record {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite values in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Png(#[from] png::EncodingError),

    #[error(transparent)]
    PngDecode(#[from] png::DecodingError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Strips any `Record` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Record { source, .. } => source.root(),
            other => other,
        }
    }
}

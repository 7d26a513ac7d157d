use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line} is not valid UTF-8")]
    InvalidUtf8 { path: PathBuf, line: usize },

    #[error("line count mismatch: source has {src} lines, target has {tgt} lines")]
    LineCountMismatch { src: usize, tgt: usize },

    #[error("origin file has {found} lines, expected {expected}")]
    OriginCountMismatch { expected: usize, found: usize },

    #[error("line {line}: invalid origin label {label:?} (expected S or T)")]
    InvalidOrigin { line: usize, label: String },

    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("invalid split fractions: {0}")]
    BadFractions(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("matrix has no non-zero singular values")]
    ZeroRank,

    #[error("cannot score: {0}")]
    EmptyGroup(String),

    #[error("token {0:?} is not in the lexicon")]
    OutOfLexicon(String),

    #[error("requested {requested} sentences from {what} but only {available} are available")]
    InsufficientData {
        what: String,
        requested: usize,
        available: usize,
    },

    #[error("translator failed: {0}")]
    Translator(String),

    #[error("single-class input: both labels must be present")]
    SingleClass,

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

    /// Whether the error comes from malformed or inconsistent input data
    /// (as opposed to a failing component further down a pipeline).
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Translator(_) | Error::InvalidArgument(_))
    }
}

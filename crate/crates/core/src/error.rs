use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("function `{name}` has no instruction lines")]
    EmptyFunction { name: String },

    #[error("function record is invalid: {0}")]
    InvalidRecord(String),

    #[error("corpus needs at least 2 records to split, got {0}")]
    CorpusTooSmall(usize),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("corpus mixes dataset variants ({first} and {second})")]
    MixedVariants { first: String, second: String },

    #[error("line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },

    #[error("malformed hexadecimal literal `{0}`")]
    MalformedHexLiteral(String),

    #[error("hexadecimal literal `{0}` does not fit in 64 bits")]
    Overflow(String),

    #[error("invalid UTF-8 input")]
    InvalidUtf8,

    #[error("token id {id} is outside the vocabulary (size {size})")]
    UnknownId { id: u32, size: usize },

    #[error("model file violates the schema: {0}")]
    SchemaViolation(String),

    #[error("vocabulary size {requested} is below the floor of {floor} (special tokens plus initial alphabet)")]
    VocabTooSmall { requested: usize, floor: usize },

    #[error("piece cannot be segmented: unit {0:?} is not in the vocabulary")]
    Unsegmentable(String),

    #[error("at least 2 models are needed for overlap, got {0}")]
    TooFewModels(usize),

    #[error("function encodes to zero tokens")]
    EmptyEncoding,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyFunction { .. } => "EmptyFunction",
            Error::InvalidRecord(_) => "InvalidRecord",
            Error::CorpusTooSmall(_) => "CorpusTooSmall",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::MixedVariants { .. } => "MixedVariants",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::MalformedHexLiteral(_) => "MalformedHexLiteral",
            Error::Overflow(_) => "Overflow",
            Error::InvalidUtf8 => "InvalidUtf8",
            Error::UnknownId { .. } => "UnknownId",
            Error::SchemaViolation(_) => "SchemaViolation",
            Error::VocabTooSmall { .. } => "VocabTooSmall",
            Error::Unsegmentable(_) => "Unsegmentable",
            Error::TooFewModels(_) => "TooFewModels",
            Error::EmptyEncoding => "EmptyEncoding",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Io { .. } => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}

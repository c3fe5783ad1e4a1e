use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("empty dataset after validation")]
    EmptyDataset,

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("unknown criterion `{0}`")]
    UnknownCriterion(String),

    #[error("invalid sort criterion `{input}`: {reason}")]
    InvalidCriterion { input: String, reason: String },

    #[error("invalid color mode `{0}`")]
    InvalidColorMode(String),

    #[error("invalid value for `{key}`: {value}")]
    InvalidParam { key: String, value: String },

    #[error("invalid view: {0}")]
    InvalidView(String),

    #[error("log format error at line {line}: {reason}")]
    LogFormat { line: usize, reason: String },

    #[error("git error: {0}")]
    Git(String),

    #[error("event log line {line}: {source}")]
    EventLog {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("bundle: bad magic")]
    BadMagic,

    #[error("bundle: format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("bundle: truncated ({0})")]
    Truncated(&'static str),

    #[error("bundle: checksum mismatch")]
    ChecksumMismatch,

    #[error("bundle: corrupt {0}")]
    Corrupt(String),

    #[error("image error: {0}")]
    Image(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::Corrupt(msg.into())
    }
}

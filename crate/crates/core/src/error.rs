use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} {index} out of range (limit {limit})")]
    Range {
        what: &'static str,
        index: u64,
        limit: u64,
    },

    #[error("key {0:#010x} is reserved as a slot sentinel")]
    SentinelKey(u32),

    #[error("value {value:#x} does not fit in {bits} bits")]
    TooWide { value: u64, bits: u32 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("page allocation failed: all {0} pages are in use")]
    AllocationFailed(u64),

    #[error("hopscotch table is full")]
    TableFull,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed dataset: {0}")]
    Dataset(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn range(what: &'static str, index: u64, limit: u64) -> Self {
        Error::Range { what, index, limit }
    }
}

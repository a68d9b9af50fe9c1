use std::path::PathBuf;

/// Invalid or inconsistent configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("required file {path} is unavailable: {reason}")]
    MissingFile { path: PathBuf, reason: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Failures while reading input files.
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {malformed} of {total} lines malformed, input looks corrupt")]
    Corrupt {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },
}

/// A record that breaks a data contract (bad label, wrong arity, ...).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{record}: {reason}")]
pub struct RecordError {
    pub record: String,
    pub reason: String,
}

impl RecordError {
    pub fn new(record: impl Into<String>, reason: impl Into<String>) -> Self {
        RecordError {
            record: record.into(),
            reason: reason.into(),
        }
    }
}

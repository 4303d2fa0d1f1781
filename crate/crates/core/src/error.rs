//! Error types, one enum per subsystem.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("referenced file does not exist: {0}")]
    MissingPath(PathBuf),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot open corpus {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv header is missing mapped column '{0}'")]
    MissingColumn(String),
}

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("token counting failed for {doc_id}: {source}")]
    Tokenize {
        doc_id: String,
        #[source]
        source: TokenizerError,
    },
}

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("malformed vocabulary file {path} at line {line}: {message}")]
    MalformedVocab {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no id for token '{0}' in vocabulary")]
    UnknownToken(String),
}

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cache I/O error on {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("pair lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("pair lists are misaligned: first offending id '{0}'")]
    Misaligned(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A single backend call outcome the gateway can act on: retryable
/// failures go through the backoff loop, fatal ones straight to the
/// dead-letter record.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("retryable backend failure: {0}")]
    Retryable(String),
    #[error("fatal backend failure: {0}")]
    Fatal(String),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no evaluation pairs given")]
    Empty,
    #[error("evaluation pair has no references")]
    NoReferences,
    #[error("confidence interval needs at least 2 scores, got {0}")]
    TooFewScores(usize),
    #[error("confidence level must lie in [0, 1), got {0}")]
    BadConfidence(f64),
}

#[derive(Debug, Error)]
pub enum VarietyError {
    #[error("class '{0}' has no training documents")]
    EmptyClass(String),
    #[error("training document '{id}' has unsupported label '{label}'")]
    BadLabel { id: String, label: String },
    #[error("document '{0}' has no extractable features (empty text)")]
    EmptyText(String),
    #[error("hypothesis and reference lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("hypothesis and reference lists are misaligned: first offending id '{0}'")]
    Misaligned(String),
    #[error("VID undefined: no reference document classified as the target variety (hyp {pct_hyp}, ref {pct_ref})")]
    Undefined { pct_hyp: f64, pct_ref: f64 },
    #[error("cannot read model {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum SftError {
    #[error("user template must contain the placeholder {placeholder} exactly once, found {found}")]
    BadPlaceholder {
        placeholder: &'static str,
        found: usize,
    },
    #[error("record does not match the template")]
    TemplateMismatch,
    #[error("write failure on {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Tokenize(#[from] TokenizerError),
}

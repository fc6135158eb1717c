use std::path::PathBuf;

use reqa_core::bm25::Bm25Error;
use reqa_core::corpus::CorpusError;
use reqa_core::encode::EncodeError;
use reqa_core::ivf::IvfError;
use reqa_core::matrix::MatrixError;
use reqa_core::metrics::MetricError;
use reqa_core::stats::StatsError;
use reqa_core::task::TaskError;
use thiserror::Error;

use crate::vectors::VectorFileError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON at byte {offset}: {message}")]
    Json { offset: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Ivf(#[from] IvfError),
    #[error(transparent)]
    Bm25(#[from] Bm25Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Vectors(#[from] VectorFileError),
    #[error("{what}: fingerprint {found} does not match task fingerprint {expected}")]
    Fingerprint { what: String, expected: String, found: String },
    #[error("{what}: row {row} has id {found:?}, task expects {expected:?}")]
    Alignment { what: String, row: usize, expected: String, found: String },
    #[error("{what}: {rows} rows, task expects {expected}")]
    RowCount { what: String, rows: usize, expected: usize },
    #[error("{path}: artifacts left stale by an interrupted {stage}")]
    Stale { path: PathBuf, stage: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot compare reports: {0}")]
    Compare(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Stable machine-readable error category.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Json { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::Corpus(_) => "validation",
            Error::Task(_) => "task",
            Error::Encode(_) => "encode",
            Error::Matrix(_) => "matrix",
            Error::Metric(_) => "metric",
            Error::Ivf(_) => "ivf",
            Error::Bm25(_) => "bm25",
            Error::Stats(_) => "stats",
            Error::Vectors(e) => e.code(),
            Error::Fingerprint { .. } => "fingerprint_mismatch",
            Error::Alignment { .. } | Error::RowCount { .. } => "alignment",
            Error::Stale { .. } => "stale_artifact",
            Error::Config(_) => "config",
            Error::Compare(_) => "compare",
        }
    }

    /// Converts a `serde_json` failure, locating syntax errors by byte offset.
    pub(crate) fn from_json(err: serde_json::Error, input: &[u8], path: Option<String>) -> Error {
        use serde_json::error::Category;
        match err.classify() {
            Category::Syntax => Error::Json { offset: byte_offset(input, err.line(), err.column()), message: err.to_string() },
            Category::Eof => Error::Json { offset: input.len(), message: err.to_string() },
            Category::Data => Error::Schema { path: path.unwrap_or_else(|| ".".into()), message: err.to_string() },
            Category::Io => Error::Json { offset: 0, message: err.to_string() },
        }
    }
}

/// Byte offset of a 1-based (line, column) position as reported by serde_json.
fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    let line_start =
        if line <= 1 { 0 } else { input.iter().enumerate().filter(|(_, &b)| b == b'\n').nth(line - 2).map_or(input.len(), |(i, _)| i + 1) };
    (line_start + column.saturating_sub(1)).min(input.len())
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::io;

use thiserror::Error;

use crate::divergence::RowKind;

/// Location of one attention row inside a dump example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowLocation {
    pub kind: RowKind,
    pub row: usize,
    pub layer: usize,
    pub head: usize,
}

impl std::fmt::Display for RowLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} row {} layer {} head {}",
            self.kind.as_str(),
            self.row,
            self.layer,
            self.head
        )
    }
}

/// Io error whose message names the file involved.
pub(crate) fn io_at(path: &std::path::Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("attention row at {location} is invalid: {reason}")]
    InvalidRow {
        location: RowLocation,
        reason: String,
    },

    #[error("attention row is empty")]
    EmptyRow,

    #[error("malformed dump: {0}")]
    MalformedDump(String),

    #[error("no rows selected for scope `{0}`")]
    EmptyScope(&'static str),

    #[error("bad dump format: {0}")]
    Format(String),

    #[error("corrupted dump at byte offset {offset}: {reason}")]
    Corruption { offset: u64, reason: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("labels contain a single class")]
    DegenerateLabels,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("cannot stratify: {0}")]
    Stratification(String),

    #[error("annotation error: {0}")]
    Annotation(String),

    #[error("metadata error: {0}")]
    Metadata(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Validation(_) | Error::InvalidRow { .. } => "validation",
            Error::EmptyRow => "empty_row",
            Error::MalformedDump(_) => "malformed_dump",
            Error::EmptyScope(_) => "empty_scope",
            Error::Format(_) => "format",
            Error::Corruption { .. } => "corruption",
            Error::Schema(_) => "schema",
            Error::DegenerateLabels => "degenerate_labels",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Stratification(_) => "stratification",
            Error::Annotation(_) => "annotation",
            Error::Metadata(_) => "metadata",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

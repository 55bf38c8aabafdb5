//! Crate-wide error type and the exit-status categories used by the CLI.

use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

/// Coarse error class; the CLI maps each class to a fixed exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad flags, bad config file, inconsistent run setup. Exit 2.
    Config,
    /// Malformed or semantically invalid data. Exit 3.
    Data,
    /// Filesystem failures. Exit 4.
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Io => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Data => "data",
            ErrorCategory::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dataset failed validation ({} violation(s)):\n{}", .0.len(), format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("{path}:{line}: duplicate record for '{id}'")]
    DuplicateRecord {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("{path}:{line}: non-finite logit for '{id}'")]
    NonFinite {
        path: PathBuf,
        line: usize,
        id: String,
    },

    #[error("unknown statement '{id}' in {context}")]
    UnknownStatement { id: String, context: String },

    #[error(
        "cell ({row},{col}) for statement '{statement_id}' out of bounds (table body is {rows}x{cols})"
    )]
    CellOutOfBounds {
        statement_id: String,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("evidence predictions mix statement ids ('{expected}' vs '{found}')")]
    MixedStatements { expected: String, found: String },

    #[error("{0} requires a non-empty input")]
    EmptyInput(&'static str),

    #[error("score set '{model_id}' does not cover statement '{statement_id}'")]
    CoverageGap {
        model_id: String,
        statement_id: String,
    },

    #[error("no scorers configured for {stage}")]
    NoScorers { stage: String },

    #[error("score set '{model_id}' is tagged {found} but was supplied for {expected}")]
    StageMismatch {
        model_id: String,
        expected: String,
        found: String,
    },

    #[error("statement '{statement_id}' has no gold label")]
    MissingGold { statement_id: String },

    #[error("statement '{statement_id}' is not gold-labeled entailed or refuted")]
    NonBinaryGold { statement_id: String },

    #[error("duplicate prediction for statement '{statement_id}'")]
    DuplicatePrediction { statement_id: String },

    #[error("need at least 2 tables, found {found}")]
    TooFewTables { found: usize },

    #[error("column-removal pool is empty")]
    EmptyPool,

    #[error("pool entry '{statement_id}' is not a column-removal example: {reason}")]
    InvalidPoolEntry {
        statement_id: String,
        reason: String,
    },

    #[error("the first column of a table cannot be removed")]
    ProtectedColumn,

    #[error("column {col} out of range for a {cols}-column table")]
    ColumnOutOfRange { col: usize, cols: usize },

    #[error("gold and prediction lists differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Config(_) | Error::NoScorers { .. } => ErrorCategory::Config,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the benchmark pipeline.
///
/// Each variant corresponds to one failure class of the public operations;
/// the CLI maps [`Error::is_config_error`] variants to exit code 1 and the
/// rest to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("typology needs {needed} illicit accounts but only {available} exist")]
    Capacity { needed: usize, available: usize },

    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    #[error("transaction log is empty")]
    EmptyLog,

    #[error("transaction {tx_id} references unknown account {account}")]
    DanglingAccount { tx_id: u64, account: u64 },

    #[error("imbalance ratio undefined: no fraud-labelled nodes")]
    UndefinedRatio,

    #[error("{file}:{line}: {reason}")]
    Schema {
        file: String,
        line: u64,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("split ratios invalid: {0}")]
    Ratio(String),

    #[error("class {class} has only {count} members; at least 3 required")]
    TinyClass { class: u8, count: usize },

    #[error("windows overlap or are out of order: {0}")]
    Overlap(String),

    #[error("relation {relation} does not exist (graph has {available})")]
    Relation { relation: usize, available: usize },

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    NonConvergence { epoch: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("AUC needs both classes present")]
    OneClass,

    #[error("aggregation needs at least 2 runs, got {0}")]
    TooFewRuns(usize),

    #[error("model `{model}`, seed {seed}, stage {stage}: {source}")]
    Run {
        model: String,
        seed: u64,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(file: impl Into<String>, line: u64, reason: impl Into<String>) -> Self {
        Error::Schema {
            file: file.into(),
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by user input (configs, schemas, preconditions)
    /// rather than by the run itself.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::Config { .. }
            | Error::Capacity { .. }
            | Error::Schema { .. }
            | Error::Json { .. }
            | Error::Ratio(_)
            | Error::Overlap(_)
            | Error::TinyClass { .. } => true,
            Error::Run { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::dgm::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("invalid data-generating mechanism: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    /// A probability hit 0 or 1 exactly, so an odds or ratio is undefined.
    #[error("degenerate probability: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Fit(#[from] FitError),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("cannot ingest {}: {reason}", .path.display())]
    Ingest { path: PathBuf, reason: String },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    /// Process exit status used by the CLI and the status codes of the C API.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Validation(_) => 3,
            Error::Domain(_) | Error::Degenerate(_) | Error::Fit(_) | Error::Estimation(_) => 4,
            Error::Ingest { .. } | Error::Io { .. } => 5,
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown key `{key}` at line {line}, column {column}")]
    UnknownKey { key: String, line: usize, column: usize },

    #[error("value out of range for `{field}`: {message}")]
    Range { field: String, message: String },

    #[error("dangling reference: {what} `{name}` is not declared")]
    DanglingReference { what: String, name: String },

    #[error("missing configuration block `[{0}]` required by this command")]
    MissingBlock(String),
}

impl ConfigError {
    pub fn range(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Range {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("perfect or quasi-complete separation: |coefficient {index}| exceeded {bound}")]
    Separation { index: usize, bound: f64 },

    #[error("information matrix is singular (rank-deficient design)")]
    Singular,

    #[error("invalid input: {0}")]
    Input(String),
}

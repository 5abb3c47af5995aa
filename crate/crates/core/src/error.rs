use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid agent id {name:?}: {reason}")]
    InvalidAgentId { name: String, reason: &'static str },

    #[error("trajectory must contain at least one agent")]
    EmptyTrajectory,

    #[error("run {run_id:?} references unknown scenario {scenario:?}")]
    UnknownScenario { scenario: String, run_id: String },

    #[error("scenario {scenario:?} expects agent {agent:?} which is not in the roster")]
    UnknownAgent { scenario: String, agent: String },

    #[error("duplicate run id {0:?}")]
    DuplicateRunId(String),

    #[error("unsupported format_version {0:?} (expected \"1\")")]
    UnsupportedFormatVersion(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("malformed JSON: {0}")]
    Syntax(String),

    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("aggregation error: {0}")]
    Aggregate(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for I/O failures and unparseable input; false for well-formed
    /// input that violates a schema or invariant.
    pub fn is_io_or_parse(&self) -> bool {
        match self {
            Error::Io(_) | Error::Syntax(_) => true,
            Error::Csv(e) => matches!(
                e.kind(),
                csv::ErrorKind::Io(_) | csv::ErrorKind::Utf8 { .. }
            ),
            Error::Line { source, .. } => source.is_io_or_parse(),
            _ => false,
        }
    }

    /// Process exit code for the CLI: 2 for I/O or parse errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_io_or_parse() {
            2
        } else {
            1
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        Error::Line {
            line,
            source: Box::new(self),
        }
    }

    pub(crate) fn from_json(err: serde_json::Error, path: impl Into<String>) -> Self {
        use serde_json::error::Category;
        match err.classify() {
            Category::Io => Error::Io(err.into()),
            Category::Syntax | Category::Eof => Error::Syntax(err.to_string()),
            Category::Data => Error::Schema {
                path: path.into(),
                message: err.to_string(),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

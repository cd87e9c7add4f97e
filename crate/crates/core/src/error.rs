use std::path::PathBuf;

use thiserror::Error;

use crate::mission::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("scenario failed validation: {}", summarize(.0))]
    Validation(Vec<Violation>),

    #[error("invalid occupancy grid file: {0}")]
    GridFormat(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error("mission invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed trace record: {0}")]
    Trace(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for configuration/input problems, 2 for runtime invariant violations.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 2,
            _ => 1,
        }
    }
}

fn summarize(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

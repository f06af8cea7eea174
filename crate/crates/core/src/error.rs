use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
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

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid motif: {0}")]
    Motif(String),

    #[error("unknown motif name `{0}`")]
    UnknownMotif(String),

    #[error("motif instance count exceeded the cap of {cap}")]
    InstanceCap { cap: u64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0} did not converge after {1} iterations")]
    NotConverged(&'static str, usize),

    #[error("zero degree at node {0}")]
    ZeroDegree(usize),

    #[error("motif `{0}` leaves every node isolated (full fragmentation)")]
    FullFragmentation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

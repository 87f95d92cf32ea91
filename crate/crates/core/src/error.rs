use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("graph is empty after cleaning")]
    EmptyGraph,

    #[error("vertex {id} has a non-finite coordinate")]
    NonFiniteCoordinate { id: String },

    #[error("edge ({u}, {v}) has invalid length {length}")]
    InvalidEdgeLength { u: String, v: String, length: f64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("vertex index {index} out of range for n = {n}")]
    VertexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge: residual {residual:e} after {matvecs} matrix-vector products")]
    EigenNonConvergence { residual: f64, matvecs: usize },

    #[error("perplexity search failed for vertex {vertex}: reached {achieved}, target {target}")]
    PerplexitySearch { vertex: usize, achieved: f64, target: f64 },

    #[error("non-finite value during {0}")]
    NonFinite(&'static str),

    #[error("malformed artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

use crate::parser::ParseError;
use crate::tensor::Shape;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("shape mismatch for {slot}: expected {expected}, found {found}")]
    ShapeMismatch { slot: String, expected: Shape, found: Shape },

    #[error("parameter slot {0} has no value")]
    MissingSlot(String),

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("non-finite value in example {example}: {source}")]
    NonFiniteExample {
        example: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grounding exceeded the cap of {cap} atoms")]
    ResourceLimit { cap: usize },

    #[error("ground program is cyclic through {atom}")]
    Cyclic { atom: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid template: {0}")]
    InvalidTemplate(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

use std::path::PathBuf;

use thiserror::Error;

use crate::adapt::PartitionTree;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("domain error: coordinate {dim} = {value} lies outside [{lower}, {upper}]")]
    Domain {
        dim: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("recovery error after {iterations} iterations (residual {residual:e}): {message}")]
    Recovery {
        iterations: usize,
        residual: f64,
        message: String,
    },

    #[error("partition integrity error: {0}")]
    Partition(String),

    #[error("model error at {point:?}: {message}")]
    Model { point: Vec<f64>, message: String },

    #[error("sample budget exceeded: {requested} model evaluations requested, cap is {cap}")]
    Budget {
        requested: usize,
        cap: usize,
        partial: Box<PartitionTree>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) => 2,
            Error::Model { .. } | Error::Domain { .. } => 3,
            Error::Recovery { .. } => 4,
            Error::Partition(_) | Error::Budget { .. } => 5,
            Error::Io { .. } => 6,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("p must satisfy 1 <= p <= n (got p = {p}, n = {n})")]
    InvalidP { n: usize, p: usize },

    #[error("solution must open at least one vertex")]
    EmptySolution,

    #[error("vertex {vertex} out of range for an instance with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("probability {value} at index {index} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("neighbourhood size mismatch: model expects k = {model}, graph has k = {graph}")]
    KMismatch { model: usize, graph: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

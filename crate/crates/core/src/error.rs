use thiserror::Error;

use crate::game::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    /// Config document does not match the schema.
    #[error("parse error at `{field}`: {message}")]
    Parse { field: String, message: String },

    /// Document parsed but violates a domain invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("{what} out of range: {value} not in [{min}, {max}]")]
    Range {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("trajectories sampled on different time grids")]
    GridMismatch,

    #[error("agent {agent} has no feasible action at node {node}")]
    EmptyActions { node: NodeId, agent: usize },

    #[error("profile has no choice for agent {agent} at node {node}")]
    UndefinedChoice { node: NodeId, agent: usize },

    #[error("sweep expands to zero games")]
    EmptySweep,

    #[error("no records to aggregate")]
    EmptyRecords,

    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}

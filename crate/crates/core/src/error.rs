use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no centerline: graph has no edges")]
    NoCenterline,

    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),

    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),

    #[error("invalid coordinate ({x}, {y}) for node {id}: {reason}")]
    InvalidCoordinate {
        id: NodeId,
        x: f64,
        y: f64,
        reason: &'static str,
    },

    #[error("edge ({0}, {1}) references an unknown node")]
    DanglingEdge(NodeId, NodeId),

    #[error("zero-length direction: neighbor coincides with node at ({x}, {y})")]
    ZeroLengthDirection { x: f64, y: f64 },

    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty batch: every row is masked")]
    EmptyBatch,

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("degenerate ground truth: no vertex pair with a finite positive path length")]
    DegenerateGroundTruth,

    #[error("proposer contract violated: {0}")]
    ProposerContract(String),

    #[error("insufficient interior edges: need {needed}, have {available}")]
    InsufficientEdges { needed: usize, available: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

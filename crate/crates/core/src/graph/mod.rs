//! Entity-relationship graph model: terms, triples and immutable snapshots.

mod entity;
mod er;
mod term;
pub mod text;
mod triple;
pub mod vocab;

pub use entity::{ArtifactVersion, EventRecord};
pub use er::{Direction, EntityRecord, ErGraph, GraphOptions, TermId};
pub use term::{compare_values, values_equal, NodeId, NodeKind, Scalar, Timestamp};
pub use triple::Triple;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("relationship cycle: {}", render_cycle(.cycle))]
    CyclicRelationship { cycle: Vec<NodeId> },
    #[error("malformed triple #{index}: {reason}")]
    MalformedTriple { index: usize, reason: String },
    #[error("unknown node '{0}'")]
    UnknownNode(NodeId),
    #[error("'{0}' is not an event: {1}")]
    NotAnEvent(NodeId, String),
    #[error("'{0}' is not an artifact version: {1}")]
    NotAVersion(NodeId, String),
}

fn render_cycle(cycle: &[NodeId]) -> String {
    let mut parts: Vec<&str> = cycle.iter().map(NodeId::as_str).collect();
    if let Some(first) = parts.first().copied() {
        parts.push(first);
    }
    parts.join(" -> ")
}

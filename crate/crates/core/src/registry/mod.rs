//! Pluggable algorithms, the snapshot store and the folder / path-node catalog.

mod algorithms;
mod catalog;
mod fsutil;
mod snapshots;

use std::io;

use thiserror::Error;

use crate::graph::GraphError;
use crate::SnapshotId;

pub use algorithms::{
    attr_eq, Algorithm, AlgorithmEntry, AlgorithmKind, AlgorithmRegistry, CorrelationFn,
    DiscoveryFn, SummarizerFn, ATTR_EQ, DFG,
};
pub use catalog::Catalog;
pub use snapshots::{SnapshotInfo, SnapshotStore, COMPACTION_THRESHOLD};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("a {kind} named '{name}' is already registered")]
    DuplicateName { kind: AlgorithmKind, name: String },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown snapshot {0}")]
    UnknownSnapshot(SnapshotId),
    #[error("snapshot {0} is in use")]
    InUse(SnapshotId),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("corrupt snapshot store: {0}")]
    Corrupt(String),
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("the name '{0}' is already used in the catalog")]
    DuplicateName(String),
    #[error("no folder or path node named '{0}'")]
    UnknownName(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("corrupt catalog: {0}")]
    Corrupt(String),
}

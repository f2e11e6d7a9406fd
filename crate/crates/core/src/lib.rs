//! Process-graph query engine.
//!
//! Business-process execution data (events, artifacts, actors and their
//! relationships) is stored as an immutable entity-relationship graph of
//! triples. On top of it the crate evaluates five statement families:
//! entity filters, correlation partitioning into folder nodes, regular
//! path queries into path nodes, version metadata queries, and a SPARQL
//! `select` subset compiled to a partition-parallel join plan.

pub mod fixtures;
pub mod graph;
pub mod ingest;
pub mod path;
pub mod plan;

/// Identifier of a committed graph snapshot. Ids start at 1.
pub type SnapshotId = u64;
pub mod metadata;
pub mod query;
pub mod registry;
pub mod session;
pub mod summarize;

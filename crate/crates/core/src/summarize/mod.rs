//! Summarization: correlation folders, path-condition folders, process
//! instances, process-model discovery and group-by summaries.

mod correlation;
mod folder;
mod group;
mod process;

use thiserror::Error;

use crate::graph::{GraphError, NodeId};
use crate::path::PathError;

pub use correlation::{partition_by_correlation, CorrelationCondition, CorrelationKind};
pub use folder::{
    apply_path_condition, refresh_timed_folder, FolderDefinition, FolderNode, Membership,
    PathCondition,
};
pub use group::{group_summarize, Aggregate, Measure, MISSING};
pub use process::{
    build_process_instances, directly_follows, discover_model, ModelEdge, ProcessInstance,
    ProcessModel,
};

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("unknown attribute '{0}'")]
    UnknownAttribute(String),
    #[error("no correlation condition registered as '{0}'")]
    UnknownRegisteredCondition(String),
    #[error("'{0}' is not an event: {1}")]
    NotAnEvent(NodeId, String),
    #[error("no discovery algorithm registered as '{0}'")]
    UnknownAlgorithm(String),
    #[error("no process instances to discover a model from")]
    EmptyInput,
    #[error("unknown aggregate '{0}' (expected count, sum, min, max or avg)")]
    UnknownAggregate(String),
    #[error("folder '{0}' has no defining query")]
    NoDefiningQuery(String),
    #[error("folder '{0}' is not timed")]
    NotTimed(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

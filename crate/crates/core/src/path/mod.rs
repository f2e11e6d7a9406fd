//! Regular path queries: expression compiler, path enumeration,
//! reachability and named path nodes.

mod node;
pub mod regex;
mod search;

pub use node::{Endpoint, PathEntry, PathNode, PathNodeSpec};
pub use regex::{EdgeTest, NodeTest, PathRegex, Quantifier, RegexError, RegexExpr};
pub use search::{
    find_paths, find_paths_between, is_reachable, FindOptions, Path, ReachabilityIndex,
    DEFAULT_MAX_HOPS,
};

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error(transparent)]
    Regex(#[from] RegexError),
    #[error("graph admits cycles; path search needs a max-hops bound")]
    UnboundedSearch,
    #[error("unknown node '{0}'")]
    UnknownNode(NodeId),
    #[error("path node '{0}' is not timed")]
    NotTimed(String),
}

//! Folder nodes: named entity sets defined by a correlation condition, a
//! path condition or an explicit member list.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{ErGraph, NodeId, Triple};
use crate::path::{Endpoint, PathRegex, ReachabilityIndex};
use crate::registry::AlgorithmRegistry;
use crate::SnapshotId;

use super::correlation::{partition_by_correlation, CorrelationCondition};
use super::SummarizeError;

/// `φ(start, end, RE)`: an entity belongs to the folder when a path matching
/// the expression leads to it from an admitted start node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCondition {
    pub regex: PathRegex,
    pub start: Endpoint,
    pub end: Endpoint,
    pub max_hops: Option<usize>,
}

impl PathCondition {
    pub fn new(regex: PathRegex) -> Self {
        Self {
            regex,
            start: Endpoint::Any,
            end: Endpoint::Any,
            max_hops: None,
        }
    }

    fn members(&self, g: &ErGraph) -> Result<BTreeSet<NodeId>, SummarizeError> {
        let mut index = ReachabilityIndex::new(g, &self.regex, self.max_hops)?;
        let mut out = BTreeSet::new();
        for s in index.start_candidates() {
            if !self.start.admits(g, g.term(s)) {
                continue;
            }
            for &e in index.ends_from(s) {
                let node = g.term(e);
                if self.end.admits(g, node) {
                    out.insert(node.clone());
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FolderDefinition {
    Correlation {
        condition: CorrelationCondition,
        prefix: Option<String>,
    },
    Path {
        regex: String,
        start: Endpoint,
        end: Endpoint,
        max_hops: Option<usize>,
    },
    Explicit,
}

impl fmt::Display for FolderDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FolderDefinition::Correlation { condition, .. } => write!(f, "correlation {condition}"),
            FolderDefinition::Path { regex, .. } => write!(f, "path {regex}"),
            FolderDefinition::Explicit => f.write_str("explicit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub id: NodeId,
    pub added_at: SnapshotId,
    pub removed_at: Option<SnapshotId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolderNode {
    pub name: String,
    pub members: BTreeSet<NodeId>,
    pub definition: FolderDefinition,
    /// Defining statement text, when created from a statement.
    pub query: Option<String>,
    pub attributes: BTreeMap<String, String>,
    pub timed: bool,
    /// Join/leave stamps; kept for timed folders only.
    pub log: Vec<Membership>,
    /// Snapshot the members were computed from.
    pub snapshot: SnapshotId,
}

impl FolderNode {
    pub(crate) fn new(
        name: String,
        members: BTreeSet<NodeId>,
        definition: FolderDefinition,
        snapshot: SnapshotId,
    ) -> Self {
        let mut folder = Self {
            name,
            members,
            definition,
            query: None,
            attributes: BTreeMap::new(),
            timed: false,
            log: Vec::new(),
            snapshot,
        };
        folder.stamp_attributes();
        folder
    }

    pub fn explicit(
        name: impl Into<String>,
        members: impl IntoIterator<Item = NodeId>,
        snapshot: SnapshotId,
    ) -> Self {
        Self::new(
            name.into(),
            members.into_iter().collect(),
            FolderDefinition::Explicit,
            snapshot,
        )
    }

    /// Turns on membership logging; current members join at the folder's snapshot.
    pub fn timed(mut self) -> Self {
        if !self.timed {
            self.timed = true;
            self.log = self
                .members
                .iter()
                .map(|id| Membership {
                    id: id.clone(),
                    added_at: self.snapshot,
                    removed_at: None,
                })
                .collect();
        }
        self
    }

    pub fn with_query(mut self, query: impl Into<String>) -> Self {
        self.query = Some(query.into());
        self
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.members.contains(id)
    }

    fn stamp_attributes(&mut self) {
        self.attributes
            .insert("condition".into(), self.definition.to_string());
        self.attributes
            .insert("cardinality".into(), self.members.len().to_string());
        self.attributes
            .insert("snapshot".into(), self.snapshot.to_string());
    }

    /// Members' triples in `g`: their attributes and the relationship
    /// edges between two members.
    pub fn induced_subgraph(&self, g: &ErGraph) -> Result<ErGraph, SummarizeError> {
        let triples: Vec<Triple> = g
            .triples()
            .filter(|t| {
                self.members.contains(&t.subject)
                    && (t.is_attribute() || self.members.contains(&t.object))
            })
            .collect();
        Ok(ErGraph::build_with(triples, g.options())?)
    }

    /// Membership log entries still open.
    pub fn active_log(&self) -> impl Iterator<Item = &Membership> {
        self.log.iter().filter(|m| m.removed_at.is_none())
    }

    fn apply_members(&mut self, fresh: BTreeSet<NodeId>, snapshot: SnapshotId) -> usize {
        let mut changes = 0;
        for m in self.log.iter_mut().filter(|m| m.removed_at.is_none()) {
            if !fresh.contains(&m.id) {
                m.removed_at = Some(snapshot);
                changes += 1;
            }
        }
        for id in fresh.difference(&self.members) {
            self.log.push(Membership {
                id: id.clone(),
                added_at: snapshot,
                removed_at: None,
            });
            changes += 1;
        }
        self.members = fresh;
        self.snapshot = snapshot;
        self.stamp_attributes();
        changes
    }
}

/// Folder of the entities reachable through `pc`.
pub fn apply_path_condition(
    g: &ErGraph,
    pc: &PathCondition,
    name: &str,
    snapshot: SnapshotId,
) -> Result<FolderNode, SummarizeError> {
    let members = pc.members(g)?;
    let definition = FolderDefinition::Path {
        regex: pc.regex.source().to_string(),
        start: pc.start.clone(),
        end: pc.end.clone(),
        max_hops: pc.max_hops,
    };
    Ok(FolderNode::new(name.to_string(), members, definition, snapshot))
}

/// Re-evaluates the defining condition of a timed folder on a newer
/// snapshot. Joiners are logged with `added_at`, leavers with `removed_at`.
/// Returns the number of log changes.
pub fn refresh_timed_folder(
    folder: &mut FolderNode,
    g: &ErGraph,
    snapshot: SnapshotId,
    registry: &AlgorithmRegistry,
) -> Result<usize, SummarizeError> {
    if !folder.timed {
        return Err(SummarizeError::NotTimed(folder.name.clone()));
    }
    let fresh = match &folder.definition {
        FolderDefinition::Explicit => {
            return Err(SummarizeError::NoDefiningQuery(folder.name.clone()))
        }
        FolderDefinition::Path {
            regex,
            start,
            end,
            max_hops,
        } => {
            let pc = PathCondition {
                regex: PathRegex::compile(regex).map_err(crate::path::PathError::from)?,
                start: start.clone(),
                end: end.clone(),
                max_hops: *max_hops,
            };
            pc.members(g)?
        }
        FolderDefinition::Correlation { condition, prefix } => {
            partition_by_correlation(g, condition, prefix.as_deref(), registry, snapshot)?
                .into_iter()
                .find(|f| f.name == folder.name)
                .map(|f| f.members)
                .unwrap_or_default()
        }
    };
    Ok(folder.apply_members(fresh, snapshot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn staff_condition() -> PathCondition {
        PathCondition::new(PathRegex::compile("Adam (edge node)* assigned-to STAFF").unwrap())
    }

    fn ids(folder: &FolderNode) -> Vec<&str> {
        folder.members.iter().map(NodeId::as_str).collect()
    }

    #[test]
    fn staff_reachable_from_adam() {
        let folder = apply_path_condition(&fixtures::banking(), &staff_condition(), "staff", 1).unwrap();
        assert_eq!(ids(&folder), ["Staff"]);
        assert_eq!(folder.attributes["cardinality"], "1");
        let folder = apply_path_condition(&fixtures::banking_extended(), &staff_condition(), "staff", 2).unwrap();
        assert_eq!(folder.len(), 2);
    }

    #[test]
    fn no_match_gives_empty_folder() {
        let pc = PathCondition::new(PathRegex::compile("Manager (edge node)* Adam").unwrap());
        let folder = apply_path_condition(&fixtures::banking(), &pc, "none", 1).unwrap();
        assert!(folder.is_empty());
    }

    #[test]
    fn timed_path_folder_refresh() {
        let registry = AlgorithmRegistry::with_builtins();
        let mut folder = apply_path_condition(&fixtures::banking(), &staff_condition(), "staff", 1)
            .unwrap()
            .timed();
        assert_eq!(
            refresh_timed_folder(&mut folder, &fixtures::banking(), 2, &registry).unwrap(),
            0
        );
        assert_eq!(
            refresh_timed_folder(&mut folder, &fixtures::banking_extended(), 3, &registry).unwrap(),
            1
        );
        let joined: Vec<_> = folder.log.iter().map(|m| (m.id.as_str(), m.added_at)).collect();
        assert_eq!(joined, [("Staff", 1), ("Staff-2", 3)]);
        refresh_timed_folder(&mut folder, &fixtures::banking(), 4, &registry).unwrap();
        assert_eq!(folder.log[1].removed_at, Some(4));
        assert_eq!(folder.len(), 1);
    }

    #[test]
    fn refresh_errors() {
        let registry = AlgorithmRegistry::with_builtins();
        let g = fixtures::banking();
        let mut plain = FolderNode::explicit("x", [NodeId::uri("Adam")], 1);
        assert!(matches!(
            refresh_timed_folder(&mut plain, &g, 2, &registry),
            Err(SummarizeError::NotTimed(_))
        ));
        let mut timed = plain.timed();
        assert!(matches!(
            refresh_timed_folder(&mut timed, &g, 2, &registry),
            Err(SummarizeError::NoDefiningQuery(_))
        ));
    }

    #[test]
    fn induced_subgraph_keeps_inner_edges() {
        let g = fixtures::banking();
        let folder = FolderNode::explicit("f", ["Adam", "document", "Staff"].map(NodeId::uri), 1);
        let sub = folder.induced_subgraph(&g).unwrap();
        assert_eq!(sub.relationship_edge_count(), 1);
        assert!(sub.triples().all(|t| folder.contains(&t.subject)));
    }
}

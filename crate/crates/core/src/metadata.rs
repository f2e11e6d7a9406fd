//! Evolution, derivation and timeseries queries over artifact versions.
//!
//! Activities are reified: an activity between two entities is stored as
//! `s -[p]-> activity -[p']-> o`, with the activity node carrying
//! `@what`, `@how`, `@when`, `@who`, `@where`, `@which` and `@why`.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{vocab, ArtifactVersion, ErGraph, GraphError, NodeId, TermId, Timestamp};
use crate::path::{Path, PathEntry, PathNode, DEFAULT_MAX_HOPS};
use crate::query::{MetaFilter, MetadataMode};
use crate::SnapshotId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetadataError {
    #[error("'{0}' is not an artifact version: {1}")]
    NotAVersion(NodeId, String),
    #[error("unknown entity '{0}'")]
    UnknownEntity(NodeId),
}

impl From<GraphError> for MetadataError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::NotAVersion(n, reason) => MetadataError::NotAVersion(n, reason),
            GraphError::UnknownNode(n) => MetadataError::UnknownEntity(n),
            other => MetadataError::NotAVersion(NodeId::uri(""), other.to_string()),
        }
    }
}

/// A validated metadata query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetadataRequest {
    pub mode: MetadataMode,
    pub target: NodeId,
    /// Keys are lower-case activity keys (`what`, `who`, ...).
    pub filters: Vec<MetaFilter>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeriesEntry {
    pub id: NodeId,
    pub at: Timestamp,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetadataResult {
    Evolution { target: NodeId, paths: PathNode },
    Derivation { target: NodeId, ancestors: Vec<NodeId> },
    Timeseries { target: NodeId, entries: Vec<SeriesEntry> },
}

impl MetadataResult {
    pub fn target(&self) -> &NodeId {
        match self {
            MetadataResult::Evolution { target, .. }
            | MetadataResult::Derivation { target, .. }
            | MetadataResult::Timeseries { target, .. } => target,
        }
    }
}

pub fn execute(g: &ErGraph, req: &MetadataRequest, snapshot: SnapshotId) -> Result<MetadataResult, MetadataError> {
    match req.mode {
        MetadataMode::Evolution => evolution_of(g, &req.target, &req.filters, snapshot),
        MetadataMode::Derivation => Ok(MetadataResult::Derivation {
            target: req.target.clone(),
            ancestors: derivation_of(g, &req.target)?,
        }),
        MetadataMode::Timeseries => Ok(MetadataResult::Timeseries {
            target: req.target.clone(),
            entries: timeseries_of(g, &req.target, &req.filters)?,
        }),
    }
}

/// Name of the path node holding the evolution paths of `target`.
pub fn evolution_node_name(target: &NodeId) -> String {
    format!("evolutionOf:{}", target.as_str())
}

fn is_activity(g: &ErGraph, id: TermId) -> bool {
    g.type_of(id) == Some(vocab::ACTIVITY_TYPE)
        || vocab::ACTIVITY_KEYS
            .iter()
            .any(|k| g.attribute(id, &format!("@{k}")).is_some())
}

fn is_version(g: &ErGraph, id: TermId) -> bool {
    g.type_of(id) == Some(vocab::VERSION_TYPE)
}

fn version_id(g: &ErGraph, node: &NodeId) -> Result<TermId, MetadataError> {
    ArtifactVersion::lookup(g, node)?;
    Ok(g.lookup(node).expect("validated version"))
}

fn parents(g: &ErGraph, id: TermId) -> impl Iterator<Item = TermId> + '_ {
    g.in_edges(id)
        .iter()
        .filter(|(p, _)| g.term(*p).as_str() == vocab::EVOLVED_INTO)
        .map(|&(_, parent)| parent)
}

fn ancestor_ids(g: &ErGraph, id: TermId) -> BTreeSet<TermId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<TermId> = parents(g, id).collect();
    while let Some(x) = stack.pop() {
        if x != id && seen.insert(x) {
            stack.extend(parents(g, x));
        }
    }
    seen
}

/// Ancestors of `version`, parents before children, ties by id.
pub fn derivation_of(g: &ErGraph, version: &NodeId) -> Result<Vec<NodeId>, MetadataError> {
    let id = version_id(g, version)?;
    let ancestors = ancestor_ids(g, id);
    let mut indegree: BTreeMap<TermId, usize> = ancestors
        .iter()
        .map(|&a| (a, parents(g, a).filter(|p| ancestors.contains(p)).count()))
        .collect();
    let mut ready: BTreeSet<TermId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&a, _)| a).collect();
    let mut out = Vec::with_capacity(ancestors.len());
    while let Some(a) = ready.pop_first() {
        out.push(g.term(a).clone());
        for &(p, child) in g.out_edges(a) {
            if g.term(p).as_str() != vocab::EVOLVED_INTO {
                continue;
            }
            if let Some(d) = indegree.get_mut(&child) {
                *d -= 1;
                if *d == 0 {
                    ready.insert(child);
                }
            }
        }
    }
    Ok(out)
}

fn activity_passes(g: &ErGraph, activity: TermId, filters: &[MetaFilter]) -> bool {
    filters.iter().all(|f| {
        g.attribute(activity, &format!("@{}", f.key))
            .is_some_and(|v| f.op.holds(v, &f.value))
    })
}

/// Activity paths from every ancestor of `version` to `version`, numbered
/// `path#1..` in node-id-sequence order. A path is dropped when any of its
/// activities violates a filter; a missing annotation counts as a violation.
pub fn evolution_of(
    g: &ErGraph,
    version: &NodeId,
    filters: &[MetaFilter],
    snapshot: SnapshotId,
) -> Result<MetadataResult, MetadataError> {
    let target = version_id(g, version)?;
    let ancestors = ancestor_ids(g, target);
    let structural: HashSet<TermId> = [vocab::VERSION_OF, vocab::EVOLVED_INTO]
        .iter()
        .filter_map(|p| g.lookup_uri(p))
        .collect();
    let max_hops = if g.is_acyclic() { usize::MAX } else { DEFAULT_MAX_HOPS };

    let mut found: Vec<(Vec<TermId>, Vec<TermId>)> = Vec::new();
    for &origin in &ancestors {
        let mut nodes = vec![origin];
        let mut preds = Vec::new();
        walk_activity_paths(g, target, &structural, max_hops, &mut nodes, &mut preds, &mut found);
    }
    found.retain(|(nodes, _)| nodes.iter().any(|&n| is_activity(g, n)));
    found.sort();
    found.dedup();

    // labels come from the unfiltered order so they do not shift under filters
    let entries = found
        .into_iter()
        .enumerate()
        .filter(|(_, (nodes, _))| {
            nodes
                .iter()
                .filter(|&&n| is_activity(g, n))
                .all(|&a| activity_passes(g, a, filters))
        })
        .map(|(k, (nodes, preds))| {
            let mut path = Path::new(g.term(nodes[0]).clone());
            for (p, n) in preds.iter().zip(&nodes[1..]) {
                path.push(g.term(*p).clone(), g.term(*n).clone());
            }
            PathEntry {
                label: format!("path#{}", k + 1),
                path,
                first_seen: snapshot,
                last_seen: snapshot,
                removed_at: None,
            }
        })
        .collect();
    Ok(MetadataResult::Evolution {
        target: version.clone(),
        paths: PathNode {
            name: evolution_node_name(version),
            regex: String::new(),
            start: crate::path::Endpoint::Any,
            end: crate::path::Endpoint::Node(version.clone()),
            timed: false,
            max_hops: None,
            snapshot,
            entries,
        },
    })
}

// Paths never pass through another version: each one describes the
// activities between a version and the target.
fn walk_activity_paths(
    g: &ErGraph,
    target: TermId,
    structural: &HashSet<TermId>,
    max_hops: usize,
    nodes: &mut Vec<TermId>,
    preds: &mut Vec<TermId>,
    out: &mut Vec<(Vec<TermId>, Vec<TermId>)>,
) {
    let here = *nodes.last().unwrap();
    if here == target && !preds.is_empty() {
        out.push((nodes.clone(), preds.clone()));
        return;
    }
    if preds.len() >= max_hops || (nodes.len() > 1 && is_version(g, here)) {
        return;
    }
    for &(p, o) in g.out_edges(here) {
        if structural.contains(&p) || nodes.contains(&o) {
            continue;
        }
        nodes.push(o);
        preds.push(p);
        walk_activity_paths(g, target, structural, max_hops, nodes, preds, out);
        nodes.pop();
        preds.pop();
    }
}

/// Snapshots of an artifact (its versions by creation time) or the
/// activity records of an actor (by `@when`).
pub fn timeseries_of(g: &ErGraph, entity: &NodeId, filters: &[MetaFilter]) -> Result<Vec<SeriesEntry>, MetadataError> {
    let id = g
        .lookup(entity)
        .filter(|&id| g.is_vertex(id))
        .ok_or_else(|| MetadataError::UnknownEntity(entity.clone()))?;
    let version_of = g.lookup_uri(vocab::VERSION_OF);
    let versions: Vec<TermId> = g
        .in_edges(id)
        .iter()
        .filter(|(p, _)| Some(*p) == version_of)
        .map(|&(_, v)| v)
        .collect();
    let is_artifact = !versions.is_empty() || g.type_of(id) == Some("artifact");

    let mut out = Vec::new();
    if is_artifact {
        for v in versions {
            let version = ArtifactVersion::from_graph(g, v)?;
            let mut attributes = version.meta.clone();
            attributes.insert("created-at".into(), version.created_at.to_string());
            let keep = filters.iter().all(|f| {
                let value = match f.key.as_str() {
                    "when" => Some(version.created_at.to_string()),
                    "who" => version.meta.get("author").cloned(),
                    k => version.meta.get(k).cloned(),
                };
                value.is_some_and(|v| f.op.holds(&v, &f.value))
            });
            if keep {
                out.push(SeriesEntry {
                    id: version.version_id,
                    at: version.created_at,
                    attributes,
                });
            }
        }
    } else {
        let who = g.lookup_uri("@who");
        let actor = entity.as_str();
        for &activity in g.vertices() {
            let Some(who) = who else { break };
            let by_actor = g
                .attribute_edges(activity)
                .iter()
                .any(|&(p, o)| p == who && g.term(o).as_str() == actor);
            if !by_actor || !activity_passes(g, activity, filters) {
                continue;
            }
            // activities without a parseable @when cannot be placed in time
            let Some(at) = g.attribute(activity, "@when").and_then(Timestamp::parse) else {
                continue;
            };
            let mut attributes = g.entity_record(activity).attributes;
            attributes.remove("type");
            out.push(SeriesEntry {
                id: g.term(activity).clone(),
                at,
                attributes,
            });
        }
    }
    out.sort_by(|a, b| (a.at, &a.id).cmp(&(b.at, &b.id)));
    Ok(out)
}

//! Process instances built from event folders and directly-follows discovery.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::graph::{ErGraph, EventRecord, GraphError, NodeId, Timestamp};
use crate::registry::AlgorithmRegistry;

use super::{FolderNode, SummarizeError};

/// The events of one process execution in chronological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessInstance {
    /// Correlation key, i.e. the name of the source folder.
    pub key: String,
    pub events: Vec<EventRecord>,
}

impl ProcessInstance {
    /// Synthetic instance whose events `key-1, key-2, ...` carry the given
    /// activities one millisecond apart.
    pub fn from_activities(key: &str, activities: &[&str]) -> Self {
        let events = activities
            .iter()
            .enumerate()
            .map(|(i, a)| EventRecord {
                id: NodeId::uri(format!("{key}-{}", i + 1)),
                actor: None,
                timestamp: Timestamp::from_millis(i as i64).expect("small instant"),
                activity: Some(a.to_string()),
                data: BTreeMap::new(),
            })
            .collect();
        Self {
            key: key.to_string(),
            events,
        }
    }

    /// Activity label per event; events without `@activity` use their id.
    pub fn activities(&self) -> Vec<&str> {
        self.events
            .iter()
            .map(|e| e.activity.as_deref().unwrap_or(e.id.as_str()))
            .collect()
    }

    /// Consecutive event pairs.
    pub fn edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.events.windows(2).map(|w| (&w[0].id, &w[1].id))
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// One instance per non-empty folder, events ordered by timestamp then id.
pub fn build_process_instances(
    g: &ErGraph,
    folders: &[FolderNode],
) -> Result<Vec<ProcessInstance>, SummarizeError> {
    let mut out = Vec::with_capacity(folders.len());
    for folder in folders {
        let mut events = Vec::with_capacity(folder.members.len());
        for id in &folder.members {
            let record = EventRecord::lookup(g, id).map_err(|e| match e {
                GraphError::NotAnEvent(n, why) => SummarizeError::NotAnEvent(n, why),
                GraphError::UnknownNode(n) => SummarizeError::NotAnEvent(n, "not in the graph".into()),
                other => SummarizeError::Graph(other),
            })?;
            events.push(record);
        }
        if events.is_empty() {
            continue;
        }
        events.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        out.push(ProcessInstance {
            key: folder.name.clone(),
            events,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelEdge {
    pub from: String,
    pub to: String,
    pub count: usize,
}

/// Summarized process graph produced by a discovery function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessModel {
    pub algorithm: String,
    pub activities: BTreeSet<String>,
    /// Sorted by (from, to).
    pub edges: Vec<ModelEdge>,
    pub starts: BTreeMap<String, usize>,
    pub ends: BTreeMap<String, usize>,
    pub instances: usize,
}

impl ProcessModel {
    pub fn edge(&self, from: &str, to: &str) -> Option<usize> {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to)
            .map(|e| e.count)
    }

    /// DOT digraph with one `"a" -> "b" [label=n];` line per edge.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph process {\n");
        for a in &self.activities {
            let _ = writeln!(out, "  {a:?};");
        }
        for e in &self.edges {
            let _ = writeln!(out, "  {:?} -> {:?} [label={}];", e.from, e.to, e.count);
        }
        out.push_str("}\n");
        out
    }
}

/// Directly-follows graph: an edge `a -> b` counts how often activity `b`
/// immediately follows `a` inside an instance.
pub fn directly_follows(instances: &[ProcessInstance]) -> ProcessModel {
    let mut activities = BTreeSet::new();
    let mut edges: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut starts = BTreeMap::new();
    let mut ends = BTreeMap::new();
    let mut count = 0;
    for inst in instances {
        let acts = inst.activities();
        let (Some(first), Some(last)) = (acts.first(), acts.last()) else {
            continue;
        };
        count += 1;
        *starts.entry(first.to_string()).or_insert(0) += 1;
        *ends.entry(last.to_string()).or_insert(0) += 1;
        activities.extend(acts.iter().map(|a| a.to_string()));
        for w in acts.windows(2) {
            *edges.entry((w[0].to_string(), w[1].to_string())).or_insert(0) += 1;
        }
    }
    ProcessModel {
        algorithm: crate::registry::DFG.to_string(),
        activities,
        edges: edges
            .into_iter()
            .map(|((from, to), count)| ModelEdge { from, to, count })
            .collect(),
        starts,
        ends,
        instances: count,
    }
}

/// Applies the discovery function registered under `algorithm`.
pub fn discover_model(
    instances: &[ProcessInstance],
    algorithm: &str,
    registry: &AlgorithmRegistry,
) -> Result<ProcessModel, SummarizeError> {
    let f = registry
        .discovery(algorithm)
        .ok_or_else(|| SummarizeError::UnknownAlgorithm(algorithm.to_string()))?;
    if instances.is_empty() {
        return Err(SummarizeError::EmptyInput);
    }
    let mut model = f(instances);
    model.algorithm = algorithm.to_string();
    Ok(model)
}

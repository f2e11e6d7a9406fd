//! Named, materialized path sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::regex::PathRegex;
use super::search::{find_paths, FindOptions, Path};
use super::PathError;
use crate::graph::{ErGraph, NodeId};
use crate::SnapshotId;

/// Restriction on a path endpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Endpoint {
    #[default]
    Any,
    Node(NodeId),
    Type(String),
}

impl Endpoint {
    pub(crate) fn admits(&self, g: &ErGraph, node: &NodeId) -> bool {
        match self {
            Endpoint::Any => true,
            Endpoint::Node(n) => n == node,
            Endpoint::Type(t) => g
                .lookup(node)
                .and_then(|id| g.type_of(id))
                .is_some_and(|ty| ty == t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathNodeSpec {
    pub name: String,
    pub start: Endpoint,
    pub end: Endpoint,
    pub regex: PathRegex,
    pub timed: bool,
    pub max_hops: Option<usize>,
}

impl PathNodeSpec {
    pub fn new(name: impl Into<String>, regex: PathRegex) -> Self {
        Self {
            name: name.into(),
            start: Endpoint::Any,
            end: Endpoint::Any,
            regex,
            timed: false,
            max_hops: None,
        }
    }

    pub fn timed(mut self) -> Self {
        self.timed = true;
        self
    }

    fn evaluate(&self, g: &ErGraph) -> Result<Vec<Path>, PathError> {
        let opts = FindOptions {
            max_hops: self.max_hops,
            ..FindOptions::default()
        };
        Ok(find_paths(g, &self.regex, &opts)?
            .into_iter()
            .filter(|p| self.start.admits(g, p.start()) && self.end.admits(g, p.end()))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEntry {
    /// `path#k`, stable across refreshes.
    pub label: String,
    pub path: Path,
    pub first_seen: SnapshotId,
    pub last_seen: SnapshotId,
    pub removed_at: Option<SnapshotId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathNode {
    pub name: String,
    pub regex: String,
    pub start: Endpoint,
    pub end: Endpoint,
    pub timed: bool,
    pub max_hops: Option<usize>,
    /// Snapshot of the latest evaluation.
    pub snapshot: SnapshotId,
    pub entries: Vec<PathEntry>,
}

impl PathNode {
    /// Evaluates `spec` on `g` and numbers the matches in result order.
    pub fn evaluate(spec: &PathNodeSpec, g: &ErGraph, snapshot: SnapshotId) -> Result<Self, PathError> {
        let paths = spec.evaluate(g)?;
        Ok(Self::from_paths(spec, paths, snapshot))
    }

    pub fn from_paths(spec: &PathNodeSpec, paths: Vec<Path>, snapshot: SnapshotId) -> Self {
        let entries = paths
            .into_iter()
            .enumerate()
            .map(|(i, path)| PathEntry {
                label: format!("path#{}", i + 1),
                path,
                first_seen: snapshot,
                last_seen: snapshot,
                removed_at: None,
            })
            .collect();
        Self {
            name: spec.name.clone(),
            regex: spec.regex.source().to_string(),
            start: spec.start.clone(),
            end: spec.end.clone(),
            timed: spec.timed,
            max_hops: spec.max_hops,
            snapshot,
            entries,
        }
    }

    pub fn spec(&self) -> Result<PathNodeSpec, PathError> {
        Ok(PathNodeSpec {
            name: self.name.clone(),
            start: self.start.clone(),
            end: self.end.clone(),
            regex: PathRegex::compile(&self.regex)?,
            timed: self.timed,
            max_hops: self.max_hops,
        })
    }

    /// Entries present at the latest evaluation.
    pub fn current(&self) -> impl Iterator<Item = &PathEntry> {
        self.entries.iter().filter(|e| e.removed_at.is_none())
    }

    pub fn paths(&self) -> Vec<&Path> {
        self.current().map(|e| &e.path).collect()
    }

    pub fn len(&self) -> usize {
        self.current().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, label: &str) -> Option<&PathEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Re-evaluates on a newer snapshot. Surviving paths keep their labels
    /// and get `last_seen` bumped; new paths get fresh labels and
    /// `first_seen`; vanished paths are stamped with `removed_at`.
    /// Returns the number of paths added.
    pub fn refresh(&mut self, g: &ErGraph, snapshot: SnapshotId) -> Result<usize, PathError> {
        if !self.timed {
            return Err(PathError::NotTimed(self.name.clone()));
        }
        let spec = self.spec()?;
        let fresh = spec.evaluate(g)?;
        let mut index: BTreeMap<Path, usize> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            if e.removed_at.is_none() {
                index.insert(e.path.clone(), i);
            }
        }
        let mut next_label = self.entries.len() + 1;
        let mut added = 0;
        let mut seen = vec![false; self.entries.len()];
        for path in fresh {
            match index.get(&path) {
                Some(&i) => {
                    seen[i] = true;
                    self.entries[i].last_seen = snapshot;
                }
                None => {
                    self.entries.push(PathEntry {
                        label: format!("path#{next_label}"),
                        path,
                        first_seen: snapshot,
                        last_seen: snapshot,
                        removed_at: None,
                    });
                    next_label += 1;
                    added += 1;
                }
            }
        }
        for (i, was_seen) in seen.into_iter().enumerate() {
            let e = &mut self.entries[i];
            if !was_seen && e.removed_at.is_none() {
                e.removed_at = Some(snapshot);
            }
        }
        self.snapshot = snapshot;
        Ok(added)
    }
}

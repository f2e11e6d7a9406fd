//! Partitioning entities with a correlation condition `ψ(x, y)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{ErGraph, NodeId, TermId};
use crate::query::{CorrelationSpec, CorrelationStmt};
use crate::registry::{AlgorithmRegistry, ATTR_EQ};
use crate::SnapshotId;

use super::folder::{FolderDefinition, FolderNode};
use super::SummarizeError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelationKind {
    /// `x.left = y.right`
    AttrEquality { left: String, right: String },
    Registered { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationCondition {
    pub kind: CorrelationKind,
    /// Only entities of this type take part.
    pub scope: Option<String>,
}

impl CorrelationCondition {
    pub fn attr_eq(left: &str, right: &str) -> Self {
        Self {
            kind: CorrelationKind::AttrEquality {
                left: left.to_string(),
                right: right.to_string(),
            },
            scope: None,
        }
    }

    pub fn registered(name: &str) -> Self {
        Self {
            kind: CorrelationKind::Registered {
                name: name.to_string(),
            },
            scope: None,
        }
    }

    pub fn within(mut self, entity_type: &str) -> Self {
        self.scope = Some(entity_type.to_string());
        self
    }

    pub fn from_statement(stmt: &CorrelationStmt) -> Self {
        let kind = match &stmt.condition {
            CorrelationSpec::AttrEq {
                left_attr,
                right_attr,
                ..
            } => CorrelationKind::AttrEquality {
                left: left_attr.clone(),
                right: right_attr.clone(),
            },
            CorrelationSpec::Registered(name) => CorrelationKind::Registered { name: name.clone() },
        };
        Self {
            kind,
            scope: stmt.scope.clone(),
        }
    }
}

impl fmt::Display for CorrelationCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CorrelationKind::AttrEquality { left, right } => write!(f, "x.{left} = y.{right}")?,
            CorrelationKind::Registered { name } => f.write_str(name)?,
        }
        if let Some(scope) = &self.scope {
            write!(f, " within {scope}")?;
        }
        Ok(())
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            // keep the smaller index as root so roots follow member order
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.0[hi] = lo;
        }
    }

    /// Components in order of their smallest element.
    fn components(mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.0.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        by_root.into_values().collect()
    }
}

fn valid_attribute(name: &str) -> bool {
    let name = name.strip_prefix('@').unwrap_or(name);
    !name.is_empty() && !name.chars().any(char::is_whitespace)
}

fn qualified(prefix: Option<&str>, base: String) -> String {
    match prefix {
        Some(p) => format!("{p}/{base}"),
        None => base,
    }
}

/// Groups the entities in scope into folders. With `x.A = y.A` the folders
/// are the groups of equal `A` values, named `A=value`. Any other condition
/// yields the connected components of the `ψ`-true pair graph, named
/// `label#k` in order of their smallest member. Entities lacking the
/// attributes a condition reads do not take part.
pub fn partition_by_correlation(
    g: &ErGraph,
    cond: &CorrelationCondition,
    prefix: Option<&str>,
    registry: &AlgorithmRegistry,
    snapshot: SnapshotId,
) -> Result<Vec<FolderNode>, SummarizeError> {
    let in_scope = |id: &TermId| match &cond.scope {
        Some(t) => g.type_of(*id) == Some(t.as_str()),
        None => true,
    };
    let scoped: Vec<TermId> = g.entities().filter(in_scope).collect();
    let folder = |name: String, members: BTreeSet<NodeId>| {
        FolderNode::new(
            qualified(prefix, name),
            members,
            FolderDefinition::Correlation {
                condition: cond.clone(),
                prefix: prefix.map(str::to_string),
            },
            snapshot,
        )
    };

    match &cond.kind {
        CorrelationKind::AttrEquality { left, right } => {
            for a in [left, right] {
                if !valid_attribute(a) {
                    return Err(SummarizeError::UnknownAttribute(a.clone()));
                }
            }
            if registry.correlation(ATTR_EQ).is_none() {
                return Err(SummarizeError::UnknownRegisteredCondition(ATTR_EQ.into()));
            }
            let left = left.strip_prefix('@').unwrap_or(left);
            let right = right.strip_prefix('@').unwrap_or(right);
            if left == right {
                let mut groups: BTreeMap<&str, BTreeSet<NodeId>> = BTreeMap::new();
                for &id in &scoped {
                    if let Some(v) = g.attribute(id, left) {
                        groups.entry(v).or_default().insert(g.term(id).clone());
                    }
                }
                return Ok(groups
                    .into_iter()
                    .map(|(v, members)| folder(format!("{left}={v}"), members))
                    .collect());
            }
            let part: Vec<TermId> = scoped
                .iter()
                .copied()
                .filter(|&id| g.attribute(id, left).is_some() || g.attribute(id, right).is_some())
                .collect();
            let mut uf = UnionFind::new(part.len());
            let mut by_right: HashMap<&str, usize> = HashMap::new();
            for (i, &id) in part.iter().enumerate() {
                if let Some(v) = g.attribute(id, right) {
                    match by_right.get(v) {
                        Some(&j) => uf.union(i, j),
                        None => {
                            by_right.insert(v, i);
                        }
                    }
                }
            }
            for (i, &id) in part.iter().enumerate() {
                if let Some(&j) = g.attribute(id, left).and_then(|v| by_right.get(v)) {
                    uf.union(i, j);
                }
            }
            Ok(components(g, &part, uf, &format!("{left}~{right}"), folder))
        }
        CorrelationKind::Registered { name } => {
            let psi = registry
                .correlation(name)
                .ok_or_else(|| SummarizeError::UnknownRegisteredCondition(name.clone()))?;
            let mut uf = UnionFind::new(scoped.len());
            for i in 0..scoped.len() {
                for j in i + 1..scoped.len() {
                    let (x, y) = (scoped[i], scoped[j]);
                    if psi(g, x, y, &[]) || psi(g, y, x, &[]) {
                        uf.union(i, j);
                    }
                }
            }
            Ok(components(g, &scoped, uf, name, folder))
        }
    }
}

fn components(
    g: &ErGraph,
    part: &[TermId],
    uf: UnionFind,
    label: &str,
    folder: impl Fn(String, BTreeSet<NodeId>) -> FolderNode,
) -> Vec<FolderNode> {
    uf.components()
        .into_iter()
        .enumerate()
        .map(|(k, idx)| {
            let members = idx.into_iter().map(|i| g.term(part[i]).clone()).collect();
            folder(format!("{label}#{}", k + 1), members)
        })
        .collect()
}

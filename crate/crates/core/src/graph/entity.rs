//! Typed views over graph nodes: events and artifact versions.

use std::collections::BTreeMap;

use super::er::{ErGraph, TermId};
use super::term::{NodeId, Timestamp};
use super::{vocab, GraphError};

/// An event `{actor, timestamp, data}`. Any node with a parseable
/// `@timestamp` can be read as an event; the actor is the subject of an
/// incoming `performed` edge when one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub id: NodeId,
    pub actor: Option<NodeId>,
    pub timestamp: Timestamp,
    pub activity: Option<String>,
    pub data: BTreeMap<String, String>,
}

impl EventRecord {
    pub fn from_graph(g: &ErGraph, id: TermId) -> Result<Self, GraphError> {
        let node = g.term(id).clone();
        let raw = g
            .attribute(id, vocab::TIMESTAMP)
            .ok_or_else(|| GraphError::NotAnEvent(node.clone(), "no @timestamp".into()))?;
        let timestamp = Timestamp::parse(raw).ok_or_else(|| {
            GraphError::NotAnEvent(node.clone(), format!("bad @timestamp '{raw}'"))
        })?;
        let actor = g
            .in_edges(id)
            .iter()
            .find(|(p, _)| g.term(*p).as_str() == vocab::PERFORMED)
            .map(|&(_, a)| g.term(a).clone());
        let record = g.entity_record(id);
        let activity = record.get("activity").map(str::to_string);
        let mut data = record.attributes;
        for key in ["type", "timestamp", "activity"] {
            data.remove(key);
        }
        Ok(Self {
            id: node,
            actor,
            timestamp,
            activity,
            data,
        })
    }

    pub fn lookup(g: &ErGraph, node: &NodeId) -> Result<Self, GraphError> {
        let id = g.vertex(node)?;
        Self::from_graph(g, id)
    }
}

/// An immutable version of a business artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactVersion {
    pub artifact: NodeId,
    pub version_id: NodeId,
    pub parents: Vec<NodeId>,
    pub created_at: Timestamp,
    pub meta: BTreeMap<String, String>,
}

impl ArtifactVersion {
    pub fn from_graph(g: &ErGraph, id: TermId) -> Result<Self, GraphError> {
        let node = g.term(id).clone();
        let not_version = |reason: String| GraphError::NotAVersion(node.clone(), reason);
        if g.type_of(id) != Some(vocab::VERSION_TYPE) {
            return Err(not_version("@type is not 'version'".into()));
        }
        let artifact = artifact_of(g, id).ok_or_else(|| not_version("no version-of edge".into()))?;
        let raw = g
            .attribute(id, vocab::CREATED_AT)
            .ok_or_else(|| not_version("no @created-at".into()))?;
        let created_at =
            Timestamp::parse(raw).ok_or_else(|| not_version(format!("bad @created-at '{raw}'")))?;
        let mut parents = Vec::new();
        for parent in parent_versions(g, id) {
            if artifact_of(g, parent) != Some(artifact.clone()) {
                return Err(not_version(format!(
                    "parent '{}' belongs to another artifact",
                    g.term(parent)
                )));
            }
            parents.push(g.term(parent).clone());
        }
        let mut meta = g.entity_record(id).attributes;
        meta.remove("type");
        meta.remove("created-at");
        Ok(Self {
            artifact,
            version_id: node,
            parents,
            created_at,
            meta,
        })
    }

    pub fn lookup(g: &ErGraph, node: &NodeId) -> Result<Self, GraphError> {
        let id = g
            .vertex(node)
            .map_err(|_| GraphError::NotAVersion(node.clone(), "unknown node".into()))?;
        Self::from_graph(g, id)
    }
}

pub(crate) fn artifact_of(g: &ErGraph, version: TermId) -> Option<NodeId> {
    g.out_edges(version)
        .iter()
        .find(|(p, _)| g.term(*p).as_str() == vocab::VERSION_OF)
        .map(|&(_, a)| g.term(a).clone())
}

pub(crate) fn parent_versions(g: &ErGraph, version: TermId) -> impl Iterator<Item = TermId> + '_ {
    g.in_edges(version)
        .iter()
        .filter(|(p, _)| g.term(*p).as_str() == vocab::EVOLVED_INTO)
        .map(|&(_, parent)| parent)
}

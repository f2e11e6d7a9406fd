//! Immutable entity-relationship graph snapshots.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::term::NodeId;
use super::triple::Triple;
use super::vocab;
use super::GraphError;

/// Dense handle of a term inside one graph snapshot. Handles are assigned
/// in term order, so comparing handles compares the terms they denote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

impl TermId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphOptions {
    /// Accept relationship cycles. Path search then needs an explicit hop bound.
    pub allow_cycles: bool,
}

/// A deduplicated, dictionary-encoded snapshot of triples with per-predicate
/// vertical partitions and adjacency indexes.
#[derive(Debug, Clone)]
pub struct ErGraph {
    terms: Vec<NodeId>,
    lookup: HashMap<NodeId, TermId>,
    triples: Vec<[TermId; 3]>,
    partitions: BTreeMap<TermId, Vec<(TermId, TermId)>>,
    out_edges: Vec<Vec<(TermId, TermId)>>,
    in_edges: Vec<Vec<(TermId, TermId)>>,
    attributes: Vec<Vec<(TermId, TermId)>>,
    is_vertex: Vec<bool>,
    vertices: Vec<TermId>,
    types: Vec<Option<TermId>>,
    relationship_edges: usize,
    acyclic: bool,
    options: GraphOptions,
}

impl PartialEq for ErGraph {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms && self.triples == other.triples
    }
}

impl Eq for ErGraph {}

impl Default for ErGraph {
    fn default() -> Self {
        Self::empty()
    }
}

impl ErGraph {
    pub fn empty() -> Self {
        Self::build(Vec::new()).expect("empty graph is valid")
    }

    pub fn build(triples: impl IntoIterator<Item = Triple>) -> Result<Self, GraphError> {
        Self::build_with(triples, GraphOptions::default())
    }

    pub fn build_with(
        triples: impl IntoIterator<Item = Triple>,
        options: GraphOptions,
    ) -> Result<Self, GraphError> {
        let triples: Vec<Triple> = triples.into_iter().collect();
        for (index, t) in triples.iter().enumerate() {
            t.validate()
                .map_err(|reason| GraphError::MalformedTriple { index, reason })?;
        }

        let mut terms: Vec<NodeId> = triples
            .iter()
            .flat_map(|t| [&t.subject, &t.predicate, &t.object])
            .cloned()
            .collect();
        terms.sort_unstable();
        terms.dedup();
        let lookup: HashMap<NodeId, TermId> = terms
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), TermId(i as u32)))
            .collect();

        let mut encoded: Vec<[TermId; 3]> = triples
            .iter()
            .map(|t| [lookup[&t.subject], lookup[&t.predicate], lookup[&t.object]])
            .collect();
        encoded.sort_unstable();
        encoded.dedup();

        let n = terms.len();
        let mut partitions: BTreeMap<TermId, Vec<(TermId, TermId)>> = BTreeMap::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut attributes = vec![Vec::new(); n];
        let mut is_vertex = vec![false; n];
        let mut types = vec![None; n];
        let mut relationship_edges = 0;
        let type_pred = lookup.get(&NodeId::uri(vocab::TYPE)).copied();

        for &[s, p, o] in &encoded {
            partitions.entry(p).or_default().push((s, o));
            is_vertex[s.index()] = true;
            if terms[p.index()].is_attribute_predicate() {
                attributes[s.index()].push((p, o));
                if Some(p) == type_pred && types[s.index()].is_none() {
                    types[s.index()] = Some(o);
                }
            } else {
                relationship_edges += 1;
                is_vertex[o.index()] = true;
                out_edges[s.index()].push((p, o));
                in_edges[o.index()].push((p, s));
            }
        }
        // order adjacency by neighbour id, then predicate
        for list in out_edges.iter_mut().chain(in_edges.iter_mut()) {
            list.sort_unstable_by_key(|&(p, x)| (x, p));
        }
        let vertices = (0..n)
            .filter(|&i| is_vertex[i])
            .map(|i| TermId(i as u32))
            .collect();

        let mut graph = Self {
            terms,
            lookup,
            triples: encoded,
            partitions,
            out_edges,
            in_edges,
            attributes,
            is_vertex,
            vertices,
            types,
            relationship_edges,
            acyclic: true,
            options,
        };
        if let Some(cycle) = graph.find_cycle() {
            if !options.allow_cycles {
                return Err(GraphError::CyclicRelationship {
                    cycle: cycle.into_iter().map(|t| graph.term(t).clone()).collect(),
                });
            }
            graph.acyclic = false;
        }
        Ok(graph)
    }

    /// Kahn's algorithm over relationship edges; returns one cycle if the
    /// edges are not a DAG.
    fn find_cycle(&self) -> Option<Vec<TermId>> {
        let n = self.terms.len();
        let mut indegree: Vec<usize> = self.in_edges.iter().map(Vec::len).collect();
        let mut queue: Vec<TermId> = self
            .vertices
            .iter()
            .copied()
            .filter(|v| indegree[v.index()] == 0)
            .collect();
        let mut removed = vec![false; n];
        while let Some(v) = queue.pop() {
            removed[v.index()] = true;
            for &(_, w) in &self.out_edges[v.index()] {
                indegree[w.index()] -= 1;
                if indegree[w.index()] == 0 {
                    queue.push(w);
                }
            }
        }
        let start = self.vertices.iter().copied().find(|v| !removed[v.index()])?;
        // every leftover vertex has a leftover predecessor; walk back until a repeat
        let mut seen: HashMap<TermId, usize> = HashMap::new();
        let mut walk = Vec::new();
        let mut cur = start;
        loop {
            if let Some(&pos) = seen.get(&cur) {
                let mut cycle: Vec<TermId> = walk[pos..].to_vec();
                cycle.reverse();
                return Some(cycle);
            }
            seen.insert(cur, walk.len());
            walk.push(cur);
            cur = self.in_edges[cur.index()]
                .iter()
                .map(|&(_, u)| u)
                .find(|u| !removed[u.index()])
                .expect("leftover vertex has a leftover predecessor");
        }
    }

    pub fn options(&self) -> GraphOptions {
        self.options
    }

    /// False only for graphs built with `allow_cycles` that actually contain a cycle.
    pub fn is_acyclic(&self) -> bool {
        self.acyclic
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn node_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn relationship_edge_count(&self) -> usize {
        self.relationship_edges
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples in canonical (subject, predicate, object) order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples.iter().map(|t| self.decode(t))
    }

    pub fn encoded_triples(&self) -> &[[TermId; 3]] {
        &self.triples
    }

    pub fn decode(&self, t: &[TermId; 3]) -> Triple {
        Triple::new(
            self.term(t[0]).clone(),
            self.term(t[1]).clone(),
            self.term(t[2]).clone(),
        )
    }

    pub fn term(&self, id: TermId) -> &NodeId {
        &self.terms[id.index()]
    }

    pub fn lookup(&self, node: &NodeId) -> Option<TermId> {
        self.lookup.get(node).copied()
    }

    pub fn lookup_uri(&self, id: &str) -> Option<TermId> {
        self.lookup(&NodeId::uri(id))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn vertices(&self) -> &[TermId] {
        &self.vertices
    }

    pub fn is_vertex(&self, id: TermId) -> bool {
        self.is_vertex.get(id.index()).copied().unwrap_or(false)
    }

    pub fn contains_node(&self, node: &NodeId) -> bool {
        self.lookup(node).is_some_and(|t| self.is_vertex(t))
    }

    /// Resolves a node to its handle, failing for terms that are not vertices.
    pub fn vertex(&self, node: &NodeId) -> Result<TermId, GraphError> {
        self.lookup(node)
            .filter(|&t| self.is_vertex(t))
            .ok_or_else(|| GraphError::UnknownNode(node.clone()))
    }

    /// Outgoing relationship edges as `(predicate, object)`, ordered by object then predicate.
    pub fn out_edges(&self, id: TermId) -> &[(TermId, TermId)] {
        &self.out_edges[id.index()]
    }

    /// Incoming relationship edges as `(predicate, subject)`.
    pub fn in_edges(&self, id: TermId) -> &[(TermId, TermId)] {
        &self.in_edges[id.index()]
    }

    /// Attribute edges of a subject as `(predicate, literal)`.
    pub fn attribute_edges(&self, id: TermId) -> &[(TermId, TermId)] {
        &self.attributes[id.index()]
    }

    /// Vertical partition of one predicate as sorted `(subject, object)` pairs.
    pub fn partition(&self, predicate: TermId) -> &[(TermId, TermId)] {
        self.partitions
            .get(&predicate)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn partition_sizes(&self) -> impl Iterator<Item = (&NodeId, usize)> {
        self.partitions
            .iter()
            .map(|(p, rows)| (self.term(*p), rows.len()))
    }

    pub fn predicates(&self) -> impl Iterator<Item = TermId> + '_ {
        self.partitions.keys().copied()
    }

    /// Value of `@type`, if any.
    pub fn type_of(&self, id: TermId) -> Option<&str> {
        self.types
            .get(id.index())
            .copied()
            .flatten()
            .map(|t| self.term(t).as_str())
    }

    /// First (smallest) value of attribute `name` (without `@`).
    pub fn attribute(&self, id: TermId, name: &str) -> Option<&str> {
        let name = name.strip_prefix('@').unwrap_or(name);
        self.attributes[id.index()]
            .iter()
            .find(|(p, _)| self.term(*p).as_str().get(1..) == Some(name))
            .map(|(_, o)| self.term(*o).as_str())
    }

    pub fn attribute_values(&self, id: TermId, name: &str) -> Vec<&str> {
        let name = name.strip_prefix('@').unwrap_or(name);
        self.attributes[id.index()]
            .iter()
            .filter(|(p, _)| self.term(*p).as_str().get(1..) == Some(name))
            .map(|(_, o)| self.term(*o).as_str())
            .collect()
    }

    pub fn attribute_of(&self, node: &NodeId, name: &str) -> Option<&str> {
        self.lookup(node).and_then(|t| self.attribute(t, name))
    }

    pub fn neighbors(
        &self,
        node: &NodeId,
        direction: Direction,
        predicate: Option<&str>,
    ) -> Result<BTreeSet<(NodeId, NodeId)>, GraphError> {
        let id = self.vertex(node)?;
        let edges = match direction {
            Direction::Out => self.out_edges(id),
            Direction::In => self.in_edges(id),
        };
        Ok(edges
            .iter()
            .filter(|(p, _)| predicate.is_none_or(|want| self.term(*p).as_str() == want))
            .map(|&(p, x)| (self.term(p).clone(), self.term(x).clone()))
            .collect())
    }

    pub fn get_entity(&self, node: &NodeId) -> Result<EntityRecord, GraphError> {
        let id = self.vertex(node)?;
        Ok(self.entity_record(id))
    }

    pub(crate) fn entity_record(&self, id: TermId) -> EntityRecord {
        let mut attributes = BTreeMap::new();
        for &(p, o) in self.attribute_edges(id) {
            let name = &self.term(p).as_str()[1..];
            attributes
                .entry(name.to_string())
                .or_insert_with(|| self.term(o).as_str().to_string());
        }
        EntityRecord {
            id: self.term(id).clone(),
            entity_type: self.type_of(id).map(str::to_string),
            attributes,
        }
    }

    /// Every vertex that carries at least one attribute.
    pub fn entities(&self) -> impl Iterator<Item = TermId> + '_ {
        self.vertices
            .iter()
            .copied()
            .filter(|v| !self.attributes[v.index()].is_empty())
    }

    pub fn union(&self, other: &ErGraph) -> Result<ErGraph, GraphError> {
        let set: BTreeSet<Triple> = self.triples().chain(other.triples()).collect();
        Self::build_with(set, self.merged_options(other))
    }

    pub fn intersect(&self, other: &ErGraph) -> Result<ErGraph, GraphError> {
        let theirs: BTreeSet<Triple> = other.triples().collect();
        let kept: Vec<Triple> = self.triples().filter(|t| theirs.contains(t)).collect();
        Self::build_with(kept, self.merged_options(other))
    }

    pub fn difference(&self, other: &ErGraph) -> Result<ErGraph, GraphError> {
        let theirs: BTreeSet<Triple> = other.triples().collect();
        let kept: Vec<Triple> = self.triples().filter(|t| !theirs.contains(t)).collect();
        Self::build_with(kept, self.options)
    }

    /// New snapshot with `add` inserted and `remove` deleted. A triple listed
    /// in both is removed.
    pub fn apply_delta(&self, add: &[Triple], remove: &[Triple]) -> Result<ErGraph, GraphError> {
        let removed: BTreeSet<&Triple> = remove.iter().collect();
        let triples: Vec<Triple> = self
            .triples()
            .filter(|t| !removed.contains(t))
            .chain(add.iter().filter(|t| !removed.contains(t)).cloned())
            .collect();
        Self::build_with(triples, self.options)
    }

    fn merged_options(&self, other: &ErGraph) -> GraphOptions {
        GraphOptions {
            allow_cycles: self.options.allow_cycles || other.options.allow_cycles,
        }
    }
}

/// An entity with its attribute edges projected into a map (names without `@`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRecord {
    pub id: NodeId,
    pub entity_type: Option<String>,
    pub attributes: BTreeMap<String, String>,
}

impl EntityRecord {
    pub fn get(&self, name: &str) -> Option<&str> {
        let name = name.strip_prefix('@').unwrap_or(name);
        self.attributes.get(name).map(String::as_str)
    }
}

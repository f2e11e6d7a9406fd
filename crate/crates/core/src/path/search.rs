//! Path enumeration and reachability over relationship edges.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regex::{EdgeTest, NodeTest, PathRegex, StateSet, Test};
use super::PathError;
use crate::graph::{ErGraph, NodeId, TermId, Triple};

/// Hop bound applied to cyclic graphs when the caller does not pick one.
pub const DEFAULT_MAX_HOPS: usize = 16;

/// A chain of relationship edges, stored as its node and predicate sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    nodes: Vec<NodeId>,
    predicates: Vec<NodeId>,
}

impl Path {
    pub fn new(start: NodeId) -> Self {
        Self {
            nodes: vec![start],
            predicates: Vec::new(),
        }
    }

    /// Builds a path from chained triples. Returns `None` for an empty list
    /// or when an object differs from the next subject.
    pub fn from_triples(triples: &[Triple]) -> Option<Self> {
        let first = triples.first()?;
        let mut path = Self::new(first.subject.clone());
        for t in triples {
            if path.end() != &t.subject {
                return None;
            }
            path.push(t.predicate.clone(), t.object.clone());
        }
        Some(path)
    }

    pub fn push(&mut self, predicate: NodeId, node: NodeId) {
        self.predicates.push(predicate);
        self.nodes.push(node);
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn predicates(&self) -> &[NodeId] {
        &self.predicates
    }

    pub fn start(&self) -> &NodeId {
        &self.nodes[0]
    }

    pub fn end(&self) -> &NodeId {
        self.nodes.last().expect("a path has at least one node")
    }

    pub fn hops(&self) -> usize {
        self.predicates.len()
    }

    pub fn triples(&self) -> Vec<Triple> {
        self.predicates
            .iter()
            .enumerate()
            .map(|(i, p)| Triple::new(self.nodes[i].clone(), p.clone(), self.nodes[i + 1].clone()))
            .collect()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.start().as_str())?;
        for (p, n) in self.predicates.iter().zip(&self.nodes[1..]) {
            write!(f, " ->({})-> {}", p.as_str(), n.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FindOptions {
    pub limit: Option<usize>,
    /// Longest path in edges. Required on graphs that admit cycles.
    pub max_hops: Option<usize>,
    /// Fan out over start candidates on the rayon pool.
    pub parallel: bool,
}

impl FindOptions {
    pub fn with_limit(limit: usize) -> Self {
        Self {
            limit: Some(limit),
            ..Self::default()
        }
    }
}

enum ResolvedTest<'a> {
    AnyNode,
    Named(Option<TermId>, &'a str),
    Exact(Vec<TermId>),
    Type(&'a str),
    AnyEdge,
    Predicate(Option<TermId>),
}

/// Regex tests bound to the terms of one graph.
pub(crate) struct Matcher<'g> {
    g: &'g ErGraph,
    regex: &'g PathRegex,
    tests: Vec<ResolvedTest<'g>>,
}

impl<'g> Matcher<'g> {
    pub(crate) fn new(g: &'g ErGraph, regex: &'g PathRegex) -> Self {
        let tests = regex
            .nfa
            .tests
            .iter()
            .map(|t| match t {
                Test::Node(NodeTest::Any) => ResolvedTest::AnyNode,
                Test::Node(NodeTest::Named(w)) => ResolvedTest::Named(g.lookup_uri(w), w),
                Test::Node(NodeTest::Exact(w)) => ResolvedTest::Exact(
                    [NodeId::uri(w.as_str()), NodeId::blank(w.as_str())]
                        .iter()
                        .filter_map(|n| g.lookup(n))
                        .collect(),
                ),
                Test::Node(NodeTest::Type(t)) => ResolvedTest::Type(t),
                Test::Edge(EdgeTest::Any) => ResolvedTest::AnyEdge,
                Test::Edge(EdgeTest::Predicate(p)) => ResolvedTest::Predicate(g.lookup_uri(p)),
            })
            .collect();
        Self { g, regex, tests }
    }

    fn node_matches(&self, test: usize, node: TermId) -> bool {
        match &self.tests[test] {
            ResolvedTest::AnyNode => true,
            ResolvedTest::Named(id, word) => {
                *id == Some(node)
                    || self
                        .g
                        .type_of(node)
                        .is_some_and(|t| t.eq_ignore_ascii_case(word))
            }
            ResolvedTest::Exact(ids) => ids.contains(&node),
            ResolvedTest::Type(t) => self.g.type_of(node) == Some(*t),
            ResolvedTest::AnyEdge | ResolvedTest::Predicate(_) => false,
        }
    }

    fn edge_matches(&self, test: usize, predicate: TermId) -> bool {
        match &self.tests[test] {
            ResolvedTest::AnyEdge => true,
            ResolvedTest::Predicate(p) => *p == Some(predicate),
            _ => false,
        }
    }

    /// State set after reading the first node, or `None` if it cannot start a match.
    pub(crate) fn start(&self, node: TermId) -> Option<StateSet> {
        let nfa = &self.regex.nfa;
        let set = nfa.step(&nfa.initial(), |t| self.node_matches(t, node));
        (!set.is_empty()).then_some(set)
    }

    /// State set after reading `predicate` then `node`.
    pub(crate) fn advance(&self, set: &StateSet, predicate: TermId, node: TermId) -> Option<StateSet> {
        let nfa = &self.regex.nfa;
        let mid = nfa.step(set, |t| self.edge_matches(t, predicate));
        if mid.is_empty() {
            return None;
        }
        let next = nfa.step(&mid, |t| self.node_matches(t, node));
        (!next.is_empty()).then_some(next)
    }

    pub(crate) fn accepts(&self, set: &StateSet) -> bool {
        self.regex.nfa.is_accepting(set)
    }

    /// Vertices that can begin a match.
    pub(crate) fn start_candidates(&self) -> Vec<TermId> {
        let nfa = &self.regex.nfa;
        let init = nfa.initial();
        let first: BTreeSet<usize> = nfa.outgoing_tests(&init).collect();
        if first.iter().any(|&t| matches!(self.tests[t], ResolvedTest::AnyNode)) {
            return self.g.vertices().to_vec();
        }
        let only_ids = first.iter().all(|&t| matches!(self.tests[t], ResolvedTest::Exact(_)));
        if only_ids {
            let mut ids: Vec<TermId> = first
                .iter()
                .flat_map(|&t| match &self.tests[t] {
                    ResolvedTest::Exact(ids) => ids.clone(),
                    _ => Vec::new(),
                })
                .filter(|&id| self.g.is_vertex(id))
                .collect();
            ids.sort_unstable();
            ids.dedup();
            return ids;
        }
        self.g
            .vertices()
            .iter()
            .copied()
            .filter(|&v| first.iter().any(|&t| self.node_matches(t, v)))
            .collect()
    }
}

fn resolve_bound(g: &ErGraph, max_hops: Option<usize>) -> Result<Option<usize>, PathError> {
    if !g.is_acyclic() && max_hops.is_none() {
        return Err(PathError::UnboundedSearch);
    }
    Ok(max_hops)
}

type Encoded = (Vec<TermId>, Vec<TermId>);

struct Walker<'a, 'g> {
    m: &'a Matcher<'g>,
    g: &'g ErGraph,
    max_hops: Option<usize>,
    simple: bool,
    end: Option<TermId>,
}

impl Walker<'_, '_> {
    fn walk(
        &self,
        node: TermId,
        set: &StateSet,
        nodes: &mut Vec<TermId>,
        preds: &mut Vec<TermId>,
        out: &mut Vec<Encoded>,
    ) {
        if self.m.accepts(set) && self.end.is_none_or(|e| e == node) {
            out.push((nodes.clone(), preds.clone()));
        }
        if self.max_hops.is_some_and(|h| preds.len() >= h) {
            return;
        }
        for &(p, o) in self.g.out_edges(node) {
            if self.simple && nodes.contains(&o) {
                continue;
            }
            let Some(next) = self.m.advance(set, p, o) else {
                continue;
            };
            nodes.push(o);
            preds.push(p);
            self.walk(o, &next, nodes, preds, out);
            nodes.pop();
            preds.pop();
        }
    }

    fn from(&self, start: TermId) -> Vec<Encoded> {
        let mut out = Vec::new();
        if let Some(set) = self.m.start(start) {
            self.walk(start, &set, &mut vec![start], &mut Vec::new(), &mut out);
        }
        out
    }
}

fn decode(g: &ErGraph, (nodes, preds): Encoded) -> Path {
    Path {
        nodes: nodes.into_iter().map(|n| g.term(n).clone()).collect(),
        predicates: preds.into_iter().map(|p| g.term(p).clone()).collect(),
    }
}

fn enumerate(
    g: &ErGraph,
    regex: &PathRegex,
    starts: Option<Vec<TermId>>,
    end: Option<TermId>,
    opts: &FindOptions,
) -> Result<Vec<Path>, PathError> {
    let max_hops = resolve_bound(g, opts.max_hops)?;
    let m = Matcher::new(g, regex);
    let starts = starts.unwrap_or_else(|| m.start_candidates());
    let walker = Walker {
        m: &m,
        g,
        max_hops,
        simple: !g.is_acyclic(),
        end,
    };
    let mut found: Vec<Encoded> = if opts.parallel && starts.len() > 1 {
        starts.par_iter().flat_map_iter(|&s| walker.from(s)).collect()
    } else {
        starts.iter().flat_map(|&s| walker.from(s)).collect()
    };
    // term ids follow term order, so this is the node-id-sequence order
    found.sort_unstable();
    if let Some(limit) = opts.limit {
        found.truncate(limit);
    }
    Ok(found.into_iter().map(|e| decode(g, e)).collect())
}

/// All paths matching `regex`, ordered by node-id sequence then predicate
/// sequence. `limit` keeps the first results of that order.
pub fn find_paths(g: &ErGraph, regex: &PathRegex, opts: &FindOptions) -> Result<Vec<Path>, PathError> {
    enumerate(g, regex, None, None, opts)
}

/// Matching paths with pinned endpoints.
pub fn find_paths_between(
    g: &ErGraph,
    regex: &PathRegex,
    from: &NodeId,
    to: &NodeId,
    opts: &FindOptions,
) -> Result<Vec<Path>, PathError> {
    let from = vertex_of(g, from)?;
    let to = vertex_of(g, to)?;
    enumerate(g, regex, Some(vec![from]), Some(to), opts)
}

fn vertex_of(g: &ErGraph, node: &NodeId) -> Result<TermId, PathError> {
    g.lookup(node)
        .filter(|&id| g.is_vertex(id))
        .ok_or_else(|| PathError::UnknownNode(node.clone()))
}

/// Whether `to` can be reached from `from`. Without a regex any chain of
/// relationship edges counts and every node reaches itself.
pub fn is_reachable(
    g: &ErGraph,
    from: &NodeId,
    to: &NodeId,
    regex: Option<&PathRegex>,
) -> Result<bool, PathError> {
    let max_hops = (!g.is_acyclic()).then_some(DEFAULT_MAX_HOPS);
    match regex {
        None => {
            let from = vertex_of(g, from)?;
            let to = vertex_of(g, to)?;
            Ok(plain_reachable(g, from, to))
        }
        Some(re) => {
            let from_id = vertex_of(g, from)?;
            let to_id = vertex_of(g, to)?;
            let mut index = ReachabilityIndex::new(g, re, max_hops)?;
            Ok(index.ends_from(from_id).contains(&to_id))
        }
    }
}

fn plain_reachable(g: &ErGraph, from: TermId, to: TermId) -> bool {
    let mut seen = HashSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            return true;
        }
        for &(_, o) in g.out_edges(n) {
            if seen.insert(o) {
                queue.push_back(o);
            }
        }
    }
    false
}

/// Regex-constrained reachability with per-start memoization. One index
/// serves one query over one snapshot.
pub struct ReachabilityIndex<'g> {
    g: &'g ErGraph,
    matcher: Matcher<'g>,
    max_hops: Option<usize>,
    memo: HashMap<TermId, BTreeSet<TermId>>,
}

impl<'g> ReachabilityIndex<'g> {
    pub fn new(g: &'g ErGraph, regex: &'g PathRegex, max_hops: Option<usize>) -> Result<Self, PathError> {
        let max_hops = resolve_bound(g, max_hops)?;
        Ok(Self {
            g,
            matcher: Matcher::new(g, regex),
            max_hops,
            memo: HashMap::new(),
        })
    }

    /// Nodes ending some match that starts at `start`.
    pub fn ends_from(&mut self, start: TermId) -> &BTreeSet<TermId> {
        if !self.memo.contains_key(&start) {
            let ends = self.compute(start);
            self.memo.insert(start, ends);
        }
        &self.memo[&start]
    }

    /// End nodes over every start candidate.
    pub fn all_ends(&mut self) -> BTreeSet<TermId> {
        let mut out = BTreeSet::new();
        for s in self.matcher.start_candidates() {
            out.extend(self.ends_from(s).iter().copied());
        }
        out
    }

    pub fn start_candidates(&self) -> Vec<TermId> {
        self.matcher.start_candidates()
    }

    fn compute(&self, start: TermId) -> BTreeSet<TermId> {
        let Some(init) = self.matcher.start(start) else {
            return BTreeSet::new();
        };
        if !self.g.is_acyclic() || self.max_hops.is_some() {
            // bounded or simple-path semantics: walk explicitly
            let walker = Walker {
                m: &self.matcher,
                g: self.g,
                max_hops: self.max_hops,
                simple: !self.g.is_acyclic(),
                end: None,
            };
            return walker.from(start).into_iter().map(|(n, _)| *n.last().unwrap()).collect();
        }
        // acyclic: every walk is a path, so a product-graph search suffices
        let mut ends = BTreeSet::new();
        let mut seen: HashSet<(TermId, StateSet)> = HashSet::new();
        let mut stack = vec![(start, init)];
        while let Some((node, set)) = stack.pop() {
            if !seen.insert((node, set.clone())) {
                continue;
            }
            if self.matcher.accepts(&set) {
                ends.insert(node);
            }
            for &(p, o) in self.g.out_edges(node) {
                if let Some(next) = self.matcher.advance(&set, p, o) {
                    stack.push((o, next));
                }
            }
        }
        ends
    }
}

//! Named external algorithms: process discovery, correlation predicates and
//! folder summarizers.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::graph::{ErGraph, TermId};
use crate::summarize::{directly_follows, FolderNode, ProcessInstance, ProcessModel};

use super::RegistryError;

/// `F_pd`: turns process instances into a model.
pub type DiscoveryFn = Arc<dyn Fn(&[ProcessInstance]) -> ProcessModel + Send + Sync>;
/// `ψ(x, y)` with optional parameters (attribute names for `attr-eq`).
pub type CorrelationFn = Arc<dyn Fn(&ErGraph, TermId, TermId, &[String]) -> bool + Send + Sync>;
/// Derives descriptive attributes for a folder.
pub type SummarizerFn = Arc<dyn Fn(&ErGraph, &FolderNode) -> BTreeMap<String, String> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlgorithmKind {
    ProcessDiscovery,
    CorrelationPredicate,
    Summarizer,
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlgorithmKind::ProcessDiscovery => "process_discovery",
            AlgorithmKind::CorrelationPredicate => "correlation_predicate",
            AlgorithmKind::Summarizer => "summarizer",
        })
    }
}

#[derive(Clone)]
pub enum Algorithm {
    Discovery(DiscoveryFn),
    Correlation(CorrelationFn),
    Summarizer(SummarizerFn),
}

impl Algorithm {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            Algorithm::Discovery(_) => AlgorithmKind::ProcessDiscovery,
            Algorithm::Correlation(_) => AlgorithmKind::CorrelationPredicate,
            Algorithm::Summarizer(_) => AlgorithmKind::Summarizer,
        }
    }
}

#[derive(Clone)]
pub struct AlgorithmEntry {
    pub name: String,
    pub algorithm: Algorithm,
}

impl AlgorithmEntry {
    pub fn discovery(
        name: impl Into<String>,
        f: impl Fn(&[ProcessInstance]) -> ProcessModel + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            algorithm: Algorithm::Discovery(Arc::new(f)),
        }
    }

    pub fn correlation(
        name: impl Into<String>,
        f: impl Fn(&ErGraph, TermId, TermId, &[String]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            algorithm: Algorithm::Correlation(Arc::new(f)),
        }
    }

    pub fn summarizer(
        name: impl Into<String>,
        f: impl Fn(&ErGraph, &FolderNode) -> BTreeMap<String, String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            algorithm: Algorithm::Summarizer(Arc::new(f)),
        }
    }
}

impl fmt::Debug for AlgorithmEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgorithmEntry({}, {})", self.algorithm.kind(), self.name)
    }
}

pub const DFG: &str = "dfg";
pub const ATTR_EQ: &str = "attr-eq";

/// `x.A = y.B` on the first values of the two attributes.
pub fn attr_eq(g: &ErGraph, x: TermId, y: TermId, params: &[String]) -> bool {
    let (a, b) = match params {
        [a] => (a.as_str(), a.as_str()),
        [a, b, ..] => (a.as_str(), b.as_str()),
        [] => return false,
    };
    match (g.attribute(x, a), g.attribute(y, b)) {
        (Some(u), Some(v)) => u == v,
        _ => false,
    }
}

/// Algorithms resolvable by kind and name. Registration happens up front;
/// afterwards the registry is only read.
#[derive(Clone, Default)]
pub struct AlgorithmRegistry {
    entries: BTreeMap<(AlgorithmKind, String), Algorithm>,
}

impl fmt::Debug for AlgorithmRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl AlgorithmRegistry {
    /// Registry without any entries.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the built-in `dfg` discovery and `attr-eq` correlation.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(AlgorithmEntry::discovery(DFG, directly_follows))
            .expect("fresh registry");
        r.register(AlgorithmEntry::correlation(ATTR_EQ, attr_eq))
            .expect("fresh registry");
        r
    }

    pub fn register(&mut self, entry: AlgorithmEntry) -> Result<(), RegistryError> {
        let key = (entry.algorithm.kind(), entry.name);
        if self.entries.contains_key(&key) {
            return Err(RegistryError::DuplicateName {
                kind: key.0,
                name: key.1,
            });
        }
        self.entries.insert(key, entry.algorithm);
        Ok(())
    }

    pub fn get(&self, kind: AlgorithmKind, name: &str) -> Option<&Algorithm> {
        self.entries.get(&(kind, name.to_string()))
    }

    pub fn discovery(&self, name: &str) -> Option<&DiscoveryFn> {
        match self.get(AlgorithmKind::ProcessDiscovery, name)? {
            Algorithm::Discovery(f) => Some(f),
            _ => None,
        }
    }

    pub fn correlation(&self, name: &str) -> Option<&CorrelationFn> {
        match self.get(AlgorithmKind::CorrelationPredicate, name)? {
            Algorithm::Correlation(f) => Some(f),
            _ => None,
        }
    }

    pub fn summarizer(&self, name: &str) -> Option<&SummarizerFn> {
        match self.get(AlgorithmKind::Summarizer, name)? {
            Algorithm::Summarizer(f) => Some(f),
            _ => None,
        }
    }

    pub fn names(&self, kind: AlgorithmKind) -> Vec<&str> {
        self.entries
            .keys()
            .filter(|(k, _)| *k == kind)
            .map(|(_, n)| n.as_str())
            .collect()
    }
}

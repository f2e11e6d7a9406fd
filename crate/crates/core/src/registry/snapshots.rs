//! Versioned graph snapshots stored as base graphs plus delta chains.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::graph::{text, ErGraph, GraphOptions, Timestamp, Triple};
use crate::ingest::read_triples;
use crate::SnapshotId;

use super::fsutil::write_atomic;
use super::StoreError;

/// A delta chain longer than this is cut by storing a full base graph.
pub const COMPACTION_THRESHOLD: usize = 64;

const CACHE_SLOTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotInfo {
    pub id: SnapshotId,
    pub created_at: Timestamp,
    pub parent: Option<SnapshotId>,
    /// Triples the commit actually added / removed.
    pub added: usize,
    pub removed: usize,
    pub triples: usize,
    /// Stored as a full graph rather than a delta.
    pub base: bool,
}

#[derive(Debug, Clone)]
enum Storage {
    Base(Arc<ErGraph>),
    Delta { add: Vec<Triple>, remove: Vec<Triple> },
}

#[derive(Debug, Clone)]
struct Entry {
    info: SnapshotInfo,
    storage: Storage,
}

#[derive(Debug)]
pub struct SnapshotStore {
    entries: BTreeMap<SnapshotId, Entry>,
    options: GraphOptions,
    pins: BTreeMap<SnapshotId, usize>,
    cache: Mutex<HashMap<SnapshotId, Arc<ErGraph>>>,
}

impl SnapshotStore {
    pub fn new(options: GraphOptions) -> Self {
        Self {
            entries: BTreeMap::new(),
            options,
            pins: BTreeMap::new(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Store whose snapshot 1 is `graph`.
    pub fn with_base(graph: ErGraph) -> Self {
        let mut store = Self::new(graph.options());
        store.push_base(None, graph, 0, 0);
        store
    }

    pub fn options(&self) -> GraphOptions {
        self.options
    }

    pub fn head(&self) -> Option<SnapshotId> {
        self.entries.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: SnapshotId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn list(&self) -> Vec<SnapshotInfo> {
        self.entries.values().map(|e| e.info.clone()).collect()
    }

    pub fn info(&self, id: SnapshotId) -> Option<&SnapshotInfo> {
        self.entries.get(&id).map(|e| &e.info)
    }

    fn next_id(&self) -> SnapshotId {
        self.head().map_or(1, |h| h + 1)
    }

    fn push_base(&mut self, parent: Option<SnapshotId>, graph: ErGraph, added: usize, removed: usize) -> SnapshotId {
        let id = self.next_id();
        let graph = Arc::new(graph);
        self.entries.insert(
            id,
            Entry {
                info: SnapshotInfo {
                    id,
                    created_at: Timestamp::now(),
                    parent,
                    added,
                    removed,
                    triples: graph.triple_count(),
                    base: true,
                },
                storage: Storage::Base(graph.clone()),
            },
        );
        self.remember(id, graph);
        id
    }

    /// Deltas between `id` and its nearest base, inclusive.
    fn chain_len(&self, mut id: SnapshotId) -> usize {
        let mut n = 0;
        while let Some(Entry {
            storage: Storage::Delta { .. },
            info,
        }) = self.entries.get(&id)
        {
            n += 1;
            match info.parent {
                Some(p) => id = p,
                None => break,
            }
        }
        n
    }

    fn remember(&self, id: SnapshotId, graph: Arc<ErGraph>) {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() >= CACHE_SLOTS && !cache.contains_key(&id) {
            let head = self.head();
            if let Some(&evict) = cache.keys().filter(|&&k| Some(k) != head).min() {
                cache.remove(&evict);
            }
        }
        cache.insert(id, graph);
    }

    /// The graph of snapshot `id`.
    pub fn graph(&self, id: SnapshotId) -> Result<Arc<ErGraph>, StoreError> {
        if let Some(g) = self
            .cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&id)
        {
            return Ok(g.clone());
        }
        let mut deltas = Vec::new();
        let mut cur = id;
        let base = loop {
            let entry = self
                .entries
                .get(&cur)
                .ok_or(StoreError::UnknownSnapshot(cur))?;
            match &entry.storage {
                Storage::Base(g) => break g.clone(),
                Storage::Delta { add, remove } => {
                    deltas.push((add, remove));
                    cur = entry
                        .info
                        .parent
                        .ok_or_else(|| StoreError::Corrupt(format!("snapshot {cur} has no base")))?;
                }
            }
        };
        if deltas.is_empty() {
            return Ok(base);
        }
        let mut triples: BTreeSet<Triple> = base.triples().collect();
        for (add, remove) in deltas.into_iter().rev() {
            for t in remove {
                triples.remove(t);
            }
            triples.extend(add.iter().cloned());
        }
        let graph = Arc::new(ErGraph::build_with(triples, self.options)?);
        self.remember(id, graph.clone());
        Ok(graph)
    }

    pub fn head_graph(&self) -> Result<Arc<ErGraph>, StoreError> {
        match self.head() {
            Some(h) => self.graph(h),
            None => Ok(Arc::new(ErGraph::build_with(Vec::new(), self.options)?)),
        }
    }

    /// Applies a delta to the head and records the result as a new snapshot.
    pub fn commit(&mut self, add: &[Triple], remove: &[Triple]) -> Result<SnapshotId, StoreError> {
        let head = self.head();
        let current = self.head_graph()?;
        let existing: BTreeSet<Triple> = current.triples().collect();
        let removing: BTreeSet<&Triple> = remove.iter().filter(|t| existing.contains(t)).collect();
        let mut adding: Vec<Triple> = add
            .iter()
            .filter(|t| !existing.contains(t) && !remove.contains(t))
            .cloned()
            .collect();
        adding.sort();
        adding.dedup();
        let removing: Vec<Triple> = removing.into_iter().cloned().collect();
        let next = current.apply_delta(&adding, &removing)?;

        let Some(parent) = head else {
            return Ok(self.push_base(None, next, adding.len(), 0));
        };
        if self.chain_len(parent) + 1 >= COMPACTION_THRESHOLD {
            return Ok(self.push_base(Some(parent), next, adding.len(), removing.len()));
        }
        let id = self.next_id();
        let next = Arc::new(next);
        self.entries.insert(
            id,
            Entry {
                info: SnapshotInfo {
                    id,
                    created_at: Timestamp::now(),
                    parent: Some(parent),
                    added: adding.len(),
                    removed: removing.len(),
                    triples: next.triple_count(),
                    base: false,
                },
                storage: Storage::Delta {
                    add: adding,
                    remove: removing,
                },
            },
        );
        self.remember(id, next);
        Ok(id)
    }

    /// Commits `graph` as the next snapshot unless it equals the head.
    pub fn commit_graph(&mut self, graph: &ErGraph) -> Result<SnapshotId, StoreError> {
        let current = self.head_graph()?;
        if let Some(h) = self.head() {
            if *current == *graph {
                return Ok(h);
            }
        }
        let theirs: BTreeSet<Triple> = graph.triples().collect();
        let ours: BTreeSet<Triple> = current.triples().collect();
        let add: Vec<Triple> = theirs.difference(&ours).cloned().collect();
        let remove: Vec<Triple> = ours.difference(&theirs).cloned().collect();
        self.commit(&add, &remove)
    }

    pub fn pin(&mut self, id: SnapshotId) -> Result<(), StoreError> {
        if !self.contains(id) {
            return Err(StoreError::UnknownSnapshot(id));
        }
        *self.pins.entry(id).or_insert(0) += 1;
        Ok(())
    }

    pub fn unpin(&mut self, id: SnapshotId) {
        if let Some(n) = self.pins.get_mut(&id) {
            *n -= 1;
            if *n == 0 {
                self.pins.remove(&id);
            }
        }
    }

    pub fn is_pinned(&self, id: SnapshotId) -> bool {
        self.pins.contains_key(&id)
    }

    /// Drops snapshot `id`. Refused for the head, pinned snapshots and ids in
    /// `referenced` (e.g. snapshots folders were computed from). Deltas based
    /// on the dropped snapshot are materialized first.
    pub fn collect(&mut self, id: SnapshotId, referenced: &BTreeSet<SnapshotId>) -> Result<(), StoreError> {
        if !self.contains(id) {
            return Err(StoreError::UnknownSnapshot(id));
        }
        if self.head() == Some(id) || self.is_pinned(id) || referenced.contains(&id) {
            return Err(StoreError::InUse(id));
        }
        let children: Vec<SnapshotId> = self
            .entries
            .values()
            .filter(|e| e.info.parent == Some(id) && matches!(e.storage, Storage::Delta { .. }))
            .map(|e| e.info.id)
            .collect();
        for child in children {
            let g = self.graph(child)?;
            let entry = self.entries.get_mut(&child).expect("child exists");
            entry.storage = Storage::Base(g);
            entry.info.base = true;
        }
        self.entries.remove(&id);
        self.cache
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .remove(&id);
        Ok(())
    }

    // ---- persistence ----

    fn manifest_path(dir: &Path) -> PathBuf {
        dir.join("manifest.json")
    }

    fn payload_files(dir: &Path, info: &SnapshotInfo) -> Vec<PathBuf> {
        if info.base {
            vec![dir.join(format!("{}.base.tsv", info.id))]
        } else {
            vec![
                dir.join(format!("{}.add.tsv", info.id)),
                dir.join(format!("{}.remove.tsv", info.id)),
            ]
        }
    }

    /// Writes missing payload files and the manifest into `dir`, then drops
    /// files no longer listed.
    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir)?;
        let mut keep: BTreeSet<PathBuf> = BTreeSet::new();
        for entry in self.entries.values() {
            let files = Self::payload_files(dir, &entry.info);
            let payloads: Vec<Vec<Triple>> = match &entry.storage {
                Storage::Base(g) => vec![g.triples().collect()],
                Storage::Delta { add, remove } => vec![add.clone(), remove.clone()],
            };
            for (path, triples) in files.iter().zip(payloads) {
                if !path.exists() {
                    let mut buf = Vec::new();
                    text::write_triples(&mut buf, &triples)?;
                    write_atomic(path, &buf)?;
                }
                keep.insert(path.clone());
            }
        }
        let manifest = serde_json::to_vec_pretty(&self.list())
            .map_err(|e| StoreError::Corrupt(e.to_string()))?;
        write_atomic(&Self::manifest_path(dir), &manifest)?;
        keep.insert(Self::manifest_path(dir));
        for item in fs::read_dir(dir)? {
            let path = item?.path();
            if path.extension().is_some_and(|e| e == "tsv") && !keep.contains(&path) {
                fs::remove_file(path)?;
            }
        }
        Ok(())
    }

    /// Loads a store saved by [`SnapshotStore::save`]; an absent manifest
    /// gives an empty store.
    pub fn open(dir: &Path, options: GraphOptions) -> Result<Self, StoreError> {
        let mut store = Self::new(options);
        let manifest = Self::manifest_path(dir);
        if !manifest.exists() {
            return Ok(store);
        }
        let infos: Vec<SnapshotInfo> = serde_json::from_slice(&fs::read(&manifest)?)
            .map_err(|e| StoreError::Corrupt(format!("{}: {e}", manifest.display())))?;
        let read = |path: &Path| -> Result<Vec<Triple>, StoreError> {
            let (triples, report) = read_triples(BufReader::new(fs::File::open(path)?))?;
            if report.rows_rejected > 0 {
                return Err(StoreError::Corrupt(format!("{}: malformed lines", path.display())));
            }
            Ok(triples)
        };
        for info in infos {
            let files = Self::payload_files(dir, &info);
            let storage = if info.base {
                Storage::Base(Arc::new(ErGraph::build_with(read(&files[0])?, options)?))
            } else {
                Storage::Delta {
                    add: read(&files[0])?,
                    remove: read(&files[1])?,
                }
            };
            store.entries.insert(info.id, Entry { info, storage });
        }
        Ok(store)
    }
}

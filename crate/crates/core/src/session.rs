//! Statement execution against a pinned snapshot, with a catalog of folder
//! and path nodes and rendering to TSV or JSON.

use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::{ErGraph, GraphOptions, NodeId, Triple};
use crate::metadata::{self, MetadataError, MetadataResult};
use crate::path::{find_paths, FindOptions, Path, PathError, PathNode, PathNodeSpec, DEFAULT_MAX_HOPS};
use crate::plan::{self, BindingTable, LogicalPlan, PlanError, PlanOptions};
use crate::query::{
    parse, split_statements, translate_entity, translate_metadata, QueryError, RelationshipStmt,
    RelationshipTarget, SelectStmt, StatementKind, SyntaxError,
};
use crate::registry::{AlgorithmRegistry, Catalog, CatalogError, SnapshotInfo, SnapshotStore, StoreError};
use crate::summarize::{
    apply_path_condition, build_process_instances, discover_model, group_summarize,
    partition_by_correlation, refresh_timed_folder, CorrelationCondition, FolderNode, Measure,
    PathCondition, SummarizeError,
};
use crate::SnapshotId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Tsv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(OutputFormat::Tsv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(SessionError::Usage(format!("unknown format '{s}' (expected tsv or json)"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error(transparent)]
    Summarize(#[from] SummarizeError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Usage(String),
}

impl From<SyntaxError> for SessionError {
    fn from(e: SyntaxError) -> Self {
        SessionError::Query(QueryError::Syntax(e))
    }
}

impl SessionError {
    pub fn syntax(&self) -> Option<&SyntaxError> {
        match self {
            SessionError::Query(QueryError::Syntax(e)) => Some(e),
            _ => None,
        }
    }

    /// Shifts a syntax error position by `base` inside `text`.
    pub fn relocate(self, text: &str, base: usize) -> Self {
        match self {
            SessionError::Query(QueryError::Syntax(e)) => e.relocate(text, base).into(),
            other => other,
        }
    }
}

pub struct Session {
    store: SnapshotStore,
    catalog: Catalog,
    registry: AlgorithmRegistry,
    current: Option<SnapshotId>,
    graph: Arc<ErGraph>,
    store_dir: Option<PathBuf>,
    pub format: OutputFormat,
    pub plan: PlanOptions,
}

impl Session {
    /// In-memory session whose snapshot 1 is `graph`.
    pub fn new(graph: ErGraph) -> Self {
        let store = SnapshotStore::with_base(graph);
        let mut session = Self::from_parts(store, Catalog::in_memory(), None);
        session.use_snapshot(1).expect("snapshot 1 exists");
        session
    }

    /// Session backed by `catalog_dir` (folders, path nodes and snapshots),
    /// or purely in memory when `None`. Starts at the latest snapshot.
    pub fn open(catalog_dir: Option<&FsPath>, options: GraphOptions) -> Result<Self, SessionError> {
        let (store, catalog, store_dir) = match catalog_dir {
            Some(dir) => {
                let store_dir = dir.join("snapshots");
                (
                    SnapshotStore::open(&store_dir, options)?,
                    Catalog::open(dir)?,
                    Some(store_dir),
                )
            }
            None => (SnapshotStore::new(options), Catalog::in_memory(), None),
        };
        let mut session = Self::from_parts(store, catalog, store_dir);
        if let Some(head) = session.store.head() {
            session.use_snapshot(head)?;
        }
        Ok(session)
    }

    fn from_parts(store: SnapshotStore, catalog: Catalog, store_dir: Option<PathBuf>) -> Self {
        let graph = Arc::new(ErGraph::build_with(Vec::new(), store.options()).expect("empty graph"));
        Self {
            store,
            catalog,
            registry: AlgorithmRegistry::with_builtins(),
            current: None,
            graph,
            store_dir,
            format: OutputFormat::Tsv,
            plan: PlanOptions::default(),
        }
    }

    pub fn registry(&self) -> &AlgorithmRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut AlgorithmRegistry {
        &mut self.registry
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn graph(&self) -> &ErGraph {
        &self.graph
    }

    /// Current snapshot id; 0 before any graph is loaded.
    pub fn snapshot(&self) -> SnapshotId {
        self.current.unwrap_or(0)
    }

    pub fn snapshots(&self) -> Vec<SnapshotInfo> {
        self.store.list()
    }

    /// Pins `id` as the snapshot later statements run against.
    pub fn use_snapshot(&mut self, id: SnapshotId) -> Result<(), SessionError> {
        let graph = self.store.graph(id)?;
        self.store.pin(id)?;
        if let Some(old) = self.current.replace(id) {
            self.store.unpin(old);
        }
        self.graph = graph;
        Ok(())
    }

    fn persist_store(&self) -> Result<(), SessionError> {
        if let Some(dir) = &self.store_dir {
            self.store.save(dir)?;
        }
        Ok(())
    }

    /// Records `graph` as a snapshot (reusing the head when identical) and switches to it.
    pub fn load_graph(&mut self, graph: &ErGraph) -> Result<SnapshotId, SessionError> {
        let id = self.store.commit_graph(graph)?;
        self.persist_store()?;
        self.use_snapshot(id)?;
        Ok(id)
    }

    /// Commits a delta on top of the latest snapshot and switches to it.
    pub fn commit(&mut self, add: &[Triple], remove: &[Triple]) -> Result<SnapshotId, SessionError> {
        let id = self.store.commit(add, remove)?;
        self.persist_store()?;
        self.use_snapshot(id)?;
        Ok(id)
    }

    /// Drops a snapshot no folder, path node or reader refers to.
    pub fn collect_snapshot(&mut self, id: SnapshotId) -> Result<(), SessionError> {
        self.store.collect(id, &self.catalog.referenced_snapshots())?;
        self.persist_store()
    }

    fn find_options(&self) -> FindOptions {
        FindOptions {
            max_hops: (!self.graph.is_acyclic()).then_some(DEFAULT_MAX_HOPS),
            parallel: self.plan.parallelism > 1,
            ..FindOptions::default()
        }
    }

    fn max_hops(&self) -> Option<usize> {
        self.find_options().max_hops
    }

    /// Select form of a select or entity statement.
    fn select_of(&self, text: &str) -> Result<SelectStmt, SessionError> {
        match parse(text)?.kind {
            StatementKind::Select(s) => Ok(s),
            StatementKind::Entity(e) => Ok(translate_entity(&e)),
            other => Err(SessionError::Usage(format!(
                "only select and entity statements compile to a plan, not {}",
                other.keyword()
            ))),
        }
    }

    pub fn plan(&self, text: &str) -> Result<LogicalPlan, SessionError> {
        let stmt = self.select_of(text)?;
        Ok(plan::plan_select(&stmt, &self.graph, &self.plan)?)
    }

    pub fn explain(&self, text: &str) -> Result<String, SessionError> {
        Ok(plan::explain(&self.plan(text)?))
    }

    /// Runs a select or entity statement and returns its bindings.
    pub fn query(&self, text: &str) -> Result<BindingTable, SessionError> {
        let stmt = self.select_of(text)?;
        Ok(plan::run_select(&stmt, &self.graph, &self.plan)?.0)
    }

    /// Executes one statement and renders its result.
    pub fn execute(&mut self, text: &str) -> Result<String, SessionError> {
        let stmt = parse(text)?;
        let source = text.trim().to_string();
        match stmt.kind {
            StatementKind::Entity(e) => {
                let (rows, _) = plan::run_select(&translate_entity(&e), &self.graph, &self.plan)?;
                Ok(self.render_table(&rows))
            }
            StatementKind::Select(s) => {
                let (rows, _) = plan::run_select(&s, &self.graph, &self.plan)?;
                Ok(self.render_table(&rows))
            }
            StatementKind::Correlation(c) => {
                let cond = CorrelationCondition::from_statement(&c);
                let mut folders = partition_by_correlation(
                    &self.graph,
                    &cond,
                    c.into.as_deref(),
                    &self.registry,
                    self.snapshot(),
                )?;
                folders = folders
                    .into_iter()
                    .map(|f| {
                        let f = f.with_query(source.clone());
                        if c.timed {
                            f.timed()
                        } else {
                            f
                        }
                    })
                    .collect();
                let out = self.render_folders(&folders);
                self.catalog.insert_folders(folders)?;
                Ok(out)
            }
            StatementKind::Relationship(r) => self.relationship(r, source),
            StatementKind::Metadata(m) => {
                let req = translate_metadata(&m)?;
                let result = metadata::execute(&self.graph, &req, self.snapshot())?;
                if let MetadataResult::Evolution { paths, .. } = &result {
                    // evolution path nodes are recomputed on every request
                    let node = paths.clone();
                    if self.catalog.path_node(&node.name).is_some() {
                        self.catalog.update_path_node(node)?;
                    } else {
                        self.catalog.insert_path_node(node)?;
                    }
                }
                Ok(self.render_metadata(&result))
            }
        }
    }

    fn relationship(&mut self, r: RelationshipStmt, source: String) -> Result<String, SessionError> {
        match r.target {
            None => {
                let paths = find_paths(&self.graph, &r.regex, &self.find_options())?;
                Ok(self.render_paths(&paths))
            }
            Some(RelationshipTarget::PathNode(name)) => {
                if self.catalog.contains(&name) {
                    return Err(CatalogError::DuplicateName(name).into());
                }
                let mut spec = PathNodeSpec::new(name, r.regex);
                spec.timed = r.timed;
                spec.max_hops = self.max_hops();
                let node = PathNode::evaluate(&spec, &self.graph, self.snapshot())?;
                let out = self.render_path_node(&node);
                self.catalog.insert_path_node(node)?;
                Ok(out)
            }
            Some(RelationshipTarget::Folder(name)) => {
                if self.catalog.contains(&name) {
                    return Err(CatalogError::DuplicateName(name).into());
                }
                let mut pc = PathCondition::new(r.regex);
                pc.max_hops = self.max_hops();
                let mut folder = apply_path_condition(&self.graph, &pc, &name, self.snapshot())?
                    .with_query(source);
                if r.timed {
                    folder = folder.timed();
                }
                let out = self.render_members(&folder);
                self.catalog.insert_folder(folder)?;
                Ok(out)
            }
        }
    }

    /// Re-evaluates a timed folder or path node on the current snapshot.
    pub fn refresh(&mut self, name: &str) -> Result<String, SessionError> {
        let snapshot = self.snapshot();
        if let Some(folder) = self.catalog.folder(name) {
            let mut folder = folder.clone();
            let changes = refresh_timed_folder(&mut folder, &self.graph, snapshot, &self.registry)?;
            self.catalog.update_folder(folder)?;
            return Ok(format!("{name}: {changes} membership changes at snapshot {snapshot}\n"));
        }
        if let Some(node) = self.catalog.path_node(name) {
            let mut node = node.clone();
            let added = node.refresh(&self.graph, snapshot)?;
            self.catalog.update_path_node(node)?;
            return Ok(format!("{name}: {added} new paths at snapshot {snapshot}\n"));
        }
        Err(CatalogError::UnknownName(name.to_string()).into())
    }

    fn folders_matching(&self, selector: &str) -> Vec<FolderNode> {
        let prefix = format!("{selector}/");
        self.catalog
            .folders()
            .filter(|f| f.name == selector || f.name.starts_with(&prefix))
            .cloned()
            .collect()
    }

    /// Process model discovered from the folder named `selector` or the
    /// folders under `selector/`, as DOT (tsv) or JSON.
    pub fn discover(&self, selector: &str, algorithm: &str) -> Result<String, SessionError> {
        let folders = self.folders_matching(selector);
        if folders.is_empty() {
            return Err(CatalogError::UnknownName(selector.to_string()).into());
        }
        let instances = build_process_instances(&self.graph, &folders)?;
        let model = discover_model(&instances, algorithm, &self.registry)?;
        Ok(match self.format {
            OutputFormat::Tsv => model.to_dot(),
            OutputFormat::Json => format!("{}\n", serde_json::to_string(&model).expect("serializable")),
        })
    }

    /// Group-by summary over a folder (`*` for every entity).
    pub fn summarize(&self, folder: &str, dimensions: &[String], measures: &[String]) -> Result<String, SessionError> {
        let folder = match folder {
            "*" => None,
            name => Some(
                self.catalog
                    .folder(name)
                    .ok_or_else(|| CatalogError::UnknownName(name.to_string()))?,
            ),
        };
        let measures: Vec<Measure> = if measures.is_empty() {
            vec![Measure::count()]
        } else {
            measures.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
        };
        let table = group_summarize(&self.graph, folder, dimensions, &measures)?;
        Ok(self.render_table(&table))
    }

    /// Executes every statement of a script, stopping at the first error.
    /// Outputs are concatenated; syntax errors carry script positions.
    pub fn run_script(&mut self, text: &str) -> Result<String, SessionError> {
        let mut out = String::new();
        for (offset, piece) in split_statements(text) {
            let rendered = self.execute(piece).map_err(|e| e.relocate(text, offset))?;
            out.push_str(&rendered);
        }
        Ok(out)
    }

    // ---- rendering ----

    pub fn render_table(&self, table: &BindingTable) -> String {
        match self.format {
            OutputFormat::Tsv => table.to_tsv(),
            OutputFormat::Json => format!("{}\n", table.to_json()),
        }
    }

    fn render_folders(&self, folders: &[FolderNode]) -> String {
        match self.format {
            OutputFormat::Tsv => {
                let mut out = String::from("folder\tcardinality\n");
                for f in folders {
                    out.push_str(&format!("{}\t{}\n", f.name, f.len()));
                }
                out
            }
            OutputFormat::Json => {
                let v: Vec<Value> = folders
                    .iter()
                    .map(|f| json!({"folder": f.name, "cardinality": f.len()}))
                    .collect();
                format!("{}\n", Value::Array(v))
            }
        }
    }

    fn render_members(&self, folder: &FolderNode) -> String {
        let table = BindingTable {
            columns: vec![folder.name.clone()],
            rows: folder.members.iter().map(|m| vec![m.clone()]).collect(),
        };
        self.render_table(&table)
    }

    pub fn render_folder_list(&self) -> String {
        let folders: Vec<FolderNode> = self.catalog.folders().cloned().collect();
        self.render_folders(&folders)
    }

    pub fn render_path_node_list(&self) -> String {
        match self.format {
            OutputFormat::Tsv => {
                let mut out = String::from("path-node\tpaths\tregex\n");
                for n in self.catalog.path_nodes() {
                    out.push_str(&format!("{}\t{}\t{}\n", n.name, n.len(), n.regex));
                }
                out
            }
            OutputFormat::Json => {
                let v: Vec<Value> = self
                    .catalog
                    .path_nodes()
                    .map(|n| json!({"path_node": n.name, "paths": n.len(), "regex": n.regex}))
                    .collect();
                format!("{}\n", Value::Array(v))
            }
        }
    }

    fn path_json(path: &Path) -> Value {
        Value::Array(
            path.triples()
                .iter()
                .map(|t| json!({"s": t.subject.as_str(), "p": t.predicate.as_str(), "o": t.object.as_str()}))
                .collect(),
        )
    }

    fn render_paths(&self, paths: &[Path]) -> String {
        match self.format {
            OutputFormat::Tsv => paths.iter().map(|p| format!("{p}\n")).collect(),
            OutputFormat::Json => {
                let v: Vec<Value> = paths.iter().map(Self::path_json).collect();
                format!("{}\n", Value::Array(v))
            }
        }
    }

    fn render_path_node(&self, node: &PathNode) -> String {
        match self.format {
            OutputFormat::Tsv => {
                let mut out = format!("{}\n", node.name);
                for e in node.current() {
                    out.push_str(&format!("{}\t{}\n", e.label, e.path));
                }
                out
            }
            OutputFormat::Json => {
                let paths: Vec<Value> = node
                    .current()
                    .map(|e| json!({"label": e.label, "triples": Self::path_json(&e.path)}))
                    .collect();
                format!("{}\n", json!({"path_node": node.name, "paths": paths}))
            }
        }
    }

    fn render_metadata(&self, result: &MetadataResult) -> String {
        match result {
            MetadataResult::Evolution { paths, .. } => self.render_path_node(paths),
            MetadataResult::Derivation { target, ancestors } => {
                let table = BindingTable {
                    columns: vec![format!("ancestors of {target}")],
                    rows: ancestors.iter().map(|a| vec![a.clone()]).collect(),
                };
                self.render_table(&table)
            }
            MetadataResult::Timeseries { entries, .. } => match self.format {
                OutputFormat::Tsv => {
                    let mut out = String::from("id\tat\tattributes\n");
                    for e in entries {
                        let attrs: Vec<String> = e.attributes.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        out.push_str(&format!("{}\t{}\t{}\n", e.id, e.at, attrs.join(";")));
                    }
                    out
                }
                OutputFormat::Json => format!("{}\n", serde_json::to_string(entries).expect("serializable")),
            },
        }
    }

    /// Node ids of a rendered single-column table, for tests and tooling.
    pub fn ids(table: &BindingTable) -> Vec<&NodeId> {
        table.rows.iter().filter_map(|r| r.first()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn entity_statement_renders_one_row() {
        let mut s = Session::new(fixtures::banking());
        let out = s
            .execute("entity artifact \\category='home-loan' AND \\submission-branch='Sydney'")
            .unwrap();
        assert_eq!(out, "e\nHome-Loan-Document\n");
        s.format = OutputFormat::Json;
        let out = s.execute("entity artifact \\category='home-loan'").unwrap();
        assert_eq!(out, "[{\"e\":\"Home-Loan-Document\"}]\n");
    }

    #[test]
    fn correlation_fills_catalog() {
        let mut s = Session::new(fixtures::banking());
        let out = s.execute("correlation x.type = y.type").unwrap();
        assert!(out.contains("type=artifact\t2\n"), "{out}");
        assert_eq!(s.catalog().folder("type=artifact").unwrap().len(), 2);
        assert!(matches!(
            s.execute("correlation x.type = y.type"),
            Err(SessionError::Catalog(CatalogError::DuplicateName(_)))
        ));
        assert!(s.render_folder_list().contains("type=staff\t1"));
    }

    #[test]
    fn relationship_forms() {
        let mut s = Session::new(fixtures::banking());
        let out = s.execute("relationship Adam (edge node)* assigned-to Staff").unwrap();
        assert_eq!(
            out,
            "Adam ->(submitted)-> document ->(part-of)-> work-item ->(assigned-to)-> Staff\n"
        );
        let out = s
            .execute("relationship Adam (edge node)* assigned-to STAFF into folder staff")
            .unwrap();
        assert_eq!(out, "staff\nStaff\n");
        let out = s
            .execute("relationship Adam (edge node)* edge Artifact into found timed")
            .unwrap();
        assert!(out.starts_with("found\npath#1\t"));
        assert_eq!(s.catalog().path_node("found").unwrap().len(), 2);
    }

    #[test]
    fn evolution_with_filters() {
        let mut s = Session::new(fixtures::evolution());
        let out = s
            .execute("metadata evolutionOf Adam_loan_document_v2 \\what='lifecycle' \\how='create'")
            .unwrap();
        let labels: Vec<&str> = out.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(labels, ["path#1", "path#2"]);
        // recomputing replaces the stored node
        s.execute("metadata evolutionOf Adam_loan_document_v2").unwrap();
        assert_eq!(
            s.catalog()
                .path_node("evolutionOf:Adam_loan_document_v2")
                .unwrap()
                .len(),
            3
        );
    }

    #[test]
    fn pinned_snapshot_is_stable() {
        let mut s = Session::new(fixtures::banking());
        let q = "select ?s ?o where { ?s submitted ?o }";
        let before = s.execute(q).unwrap();
        s.commit(&[Triple::link("Eve", "submitted", "form")], &[]).unwrap();
        assert_ne!(s.execute(q).unwrap(), before);
        s.use_snapshot(1).unwrap();
        assert_eq!(s.execute(q).unwrap(), before);
    }

    #[test]
    fn script_errors_are_relocated() {
        let mut s = Session::new(fixtures::banking());
        let script = "entity actor;\n\nentity artifact \\a=\n";
        let err = s.run_script(script).unwrap_err();
        let syn = err.syntax().unwrap();
        assert_eq!((syn.line, syn.column), (3, 20));
    }

    #[test]
    fn timed_folder_refresh_through_session() {
        let mut s = Session::new(fixtures::banking());
        s.execute("relationship Adam (edge node)* assigned-to STAFF into folder staff timed")
            .unwrap();
        let ext: Vec<Triple> = fixtures::parse_tsv(fixtures::BANKING_EXTENSION_TSV);
        s.commit(&ext, &[]).unwrap();
        let out = s.refresh("staff").unwrap();
        assert!(out.starts_with("staff: 1 membership changes"), "{out}");
        assert_eq!(s.catalog().folder("staff").unwrap().len(), 2);
    }

    #[test]
    fn discover_and_summarize() {
        let mut t = Vec::new();
        for (e, order, ts, act) in [
            ("e1", "o1", "2017-01-01T00:00:01Z", "A"),
            ("e2", "o1", "2017-01-01T00:00:02Z", "B"),
            ("e3", "o2", "2017-01-01T00:00:01Z", "A"),
            ("e4", "o2", "2017-01-01T00:00:03Z", "C"),
        ] {
            t.push(Triple::attr(e, "type", "event"));
            t.push(Triple::attr(e, "order", order));
            t.push(Triple::attr(e, "timestamp", ts));
            t.push(Triple::attr(e, "activity", act));
        }
        let mut s = Session::new(ErGraph::build(t).unwrap());
        s.execute("correlation x.order = y.order into orders").unwrap();
        let dot = s.discover("orders", "dfg").unwrap();
        assert!(dot.contains("\"A\" -> \"B\" [label=1];"));
        assert!(dot.contains("\"A\" -> \"C\" [label=1];"));
        let table = s.summarize("*", &["activity".to_string()], &[]).unwrap();
        assert_eq!(table, "activity\tcount\nA\t2\nB\t1\nC\t1\n");
    }
}

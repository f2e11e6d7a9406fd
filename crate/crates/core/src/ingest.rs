//! Data mapping layer: triple files and CSV event logs into graph snapshots.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{
    text, vocab, ErGraph, EventRecord, GraphError, GraphOptions, NodeId, Timestamp, Triple,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("input contains no usable rows")]
    EmptyInput,
    #[error("event log has no column '{0}'")]
    MissingColumn(String),
    #[error("mapping config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("malformed event log: {0}")]
    Csv(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line: usize,
    pub reason: String,
}

/// Counters for one ingestion run. `rows_read` is always accepted + rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub triples_emitted: usize,
    pub rows_rejected: usize,
    pub rejects: Vec<Reject>,
}

impl IngestReport {
    pub fn rows_accepted(&self) -> usize {
        self.rows_read - self.rows_rejected
    }

    fn reject(&mut self, line: usize, reason: impl Into<String>) {
        self.rows_rejected += 1;
        self.rejects.push(Reject {
            line,
            reason: reason.into(),
        });
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads triple text, keeping every well-formed line and reporting the rest.
pub fn read_triples<R: BufRead>(reader: R) -> Result<(Vec<Triple>, IngestReport), io::Error> {
    let mut report = IngestReport::default();
    let mut triples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if text::is_skippable(&line) {
            continue;
        }
        report.rows_read += 1;
        match text::parse_line(line.trim_end_matches('\r')) {
            Ok(t) => triples.push(t),
            Err(reason) => report.reject(idx + 1, reason),
        }
    }
    report.triples_emitted = triples.len();
    Ok((triples, report))
}

pub fn load_triple_file(
    path: impl AsRef<Path>,
    options: GraphOptions,
) -> Result<(ErGraph, IngestReport), IngestError> {
    let path = path.as_ref();
    let (triples, report) =
        read_triples(BufReader::new(open(path)?)).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    if report.rows_accepted() == 0 {
        return Err(IngestError::EmptyInput);
    }
    let graph = ErGraph::build_with(triples, options)?;
    Ok((graph, report))
}

/// Writes a graph back out in the triple text format.
pub fn export_triples<W: Write>(graph: &ErGraph, out: W) -> io::Result<()> {
    let triples: Vec<Triple> = graph.triples().collect();
    text::write_triples(out, &triples)
}

/// Column mapping for CSV event logs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogMapping {
    pub event_id: String,
    pub timestamp: String,
    pub actor: String,
    pub activity: String,
    /// chrono format string; ISO-8601 when absent.
    pub time_format: Option<String>,
}

impl Default for LogMapping {
    fn default() -> Self {
        Self {
            event_id: "event_id".into(),
            timestamp: "timestamp".into(),
            actor: "actor".into(),
            activity: "activity".into(),
            time_format: None,
        }
    }
}

impl LogMapping {
    /// Parses `key=value` lines (`col.event_id`, `col.timestamp`,
    /// `col.actor`, `col.activity`, `timefmt`); `#` starts a comment line.
    pub fn parse(source: &str) -> Result<Self, IngestError> {
        let mut mapping = Self::default();
        for (idx, line) in source.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let config_err = |reason: String| IngestError::Config {
                line: idx + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err("expected key=value".into()))?;
            let value = value.trim().to_string();
            match key.trim() {
                "col.event_id" => mapping.event_id = value,
                "col.timestamp" => mapping.timestamp = value,
                "col.actor" => mapping.actor = value,
                "col.activity" => mapping.activity = value,
                "timefmt" => mapping.time_format = Some(value),
                other => return Err(config_err(format!("unknown key '{other}'"))),
            }
        }
        Ok(mapping)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let mut source = String::new();
        open(path)?
            .read_to_string(&mut source)
            .map_err(|source| IngestError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        Self::parse(&source)
    }

    fn parse_time(&self, raw: &str) -> Option<Timestamp> {
        match &self.time_format {
            Some(fmt) => Timestamp::parse_with(raw, fmt),
            None => Timestamp::parse(raw),
        }
    }
}

/// Maps CSV rows to triples. Each accepted row yields an event node with
/// `@type`, `@timestamp` and `@activity`, an `actor performed event` edge,
/// and one attribute per non-empty extra column.
pub fn read_event_log<R: Read>(
    reader: R,
    mapping: &LogMapping,
) -> Result<(Vec<Triple>, IngestReport), IngestError> {
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let id_col = column(&mapping.event_id)?;
    let ts_col = column(&mapping.timestamp)?;
    let actor_col = column(&mapping.actor)?;
    let activity_col = column(&mapping.activity)?;
    let core = [id_col, ts_col, actor_col, activity_col];
    let extras: Vec<(usize, &str)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !core.contains(i))
        .collect();

    let mut report = IngestReport::default();
    let mut triples = Vec::new();
    let mut seen = HashSet::new();
    for record in csv.records() {
        let record = record.map_err(|e| IngestError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        report.rows_read += 1;
        let field = |i: usize| record.get(i).unwrap_or("");
        let (event_id, raw_ts, actor, activity) =
            (field(id_col), field(ts_col), field(actor_col), field(activity_col));
        if event_id.is_empty() || actor.is_empty() || activity.is_empty() {
            report.reject(line, "missing event id, actor or activity");
            continue;
        }
        let Some(timestamp) = mapping.parse_time(raw_ts) else {
            report.reject(line, format!("bad timestamp '{raw_ts}'"));
            continue;
        };
        if !seen.insert(event_id.to_string()) {
            report.reject(line, format!("duplicate event id '{event_id}'"));
            continue;
        }
        triples.push(Triple::link(actor, vocab::PERFORMED, event_id));
        triples.push(Triple::attr(event_id, vocab::TYPE, vocab::EVENT_TYPE));
        triples.push(Triple::attr(event_id, vocab::TIMESTAMP, &timestamp.to_string()));
        triples.push(Triple::attr(event_id, vocab::ACTIVITY, activity));
        for &(i, name) in &extras {
            let value = field(i);
            if !value.is_empty() {
                triples.push(Triple::attr(event_id, name, value));
            }
        }
    }
    report.triples_emitted = triples.len();
    Ok((triples, report))
}

pub fn load_event_log(
    path: impl AsRef<Path>,
    mapping: &LogMapping,
    options: GraphOptions,
) -> Result<(ErGraph, IngestReport), IngestError> {
    let (triples, report) = read_event_log(open(path.as_ref())?, mapping)?;
    if report.rows_accepted() == 0 {
        return Err(IngestError::EmptyInput);
    }
    Ok((ErGraph::build_with(triples, options)?, report))
}

/// Adds `happened-before` edges linking each event to its immediate
/// successor in timestamp order (ties by id). `scope` restricts the events
/// considered; `None` means every node typed `event`.
pub fn emit_time_order_edges(
    graph: &ErGraph,
    scope: Option<&[NodeId]>,
) -> Result<ErGraph, GraphError> {
    let mut events: Vec<EventRecord> = match scope {
        Some(ids) => ids
            .iter()
            .map(|n| EventRecord::lookup(graph, n))
            .collect::<Result<_, _>>()?,
        None => graph
            .vertices()
            .iter()
            .filter(|&&v| graph.type_of(v) == Some(vocab::EVENT_TYPE))
            .map(|&v| EventRecord::from_graph(graph, v))
            .collect::<Result<_, _>>()?,
    };
    events.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
    events.dedup_by(|a, b| a.id == b.id);
    let edges: Vec<Triple> = events
        .windows(2)
        .map(|w| {
            Triple::new(
                w[0].id.clone(),
                NodeId::uri(vocab::HAPPENED_BEFORE),
                w[1].id.clone(),
            )
        })
        .collect();
    graph.apply_delta(&edges, &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Direction;
    use std::io::Cursor;

    fn log(rows: &str) -> String {
        format!("event_id,timestamp,actor,activity\n{rows}")
    }

    #[test]
    fn triple_text_with_a_bad_line() {
        let src = "a\tp\tb\nb\tp\tc\nc\tonly-two\nc\tp\td\nd\tp\te\ne\tp\tf\n";
        let (triples, report) = read_triples(Cursor::new(src)).unwrap();
        assert_eq!(triples.len(), 5);
        assert_eq!(report.rows_rejected, 1);
        assert_eq!(report.rejects[0].line, 3);
        assert_eq!(report.rows_read, report.rows_accepted() + report.rows_rejected);
    }

    #[test]
    fn event_log_mapping_counts() {
        let src = log("e1,2017-12-01T09:00:00Z,Tim,A\ne2,2017-12-01T10:00:00Z,Tim,B\ne3,2017-12-01T11:00:00Z,Tim,C\n");
        let (triples, report) = read_event_log(Cursor::new(src), &LogMapping::default()).unwrap();
        assert_eq!(report.rows_accepted(), 3);
        let g = ErGraph::build(triples).unwrap();
        let performed = g
            .neighbors(&NodeId::uri("Tim"), Direction::Out, Some("performed"))
            .unwrap();
        assert_eq!(performed.len(), 3);
        let attrs = g.triples().filter(Triple::is_attribute).count();
        assert!(attrs >= 9);
        assert_eq!(g.triple_count(), 3 * (1 + 3));
    }

    #[test]
    fn bad_timestamp_rejects_only_that_row() {
        let src = log("e1,2017-12-01T09:00:00Z,Tim,A\ne2,not-a-date,Tim,B\ne3,2017-12-01T11:00:00Z,Tim,C\n");
        let (triples, report) = read_event_log(Cursor::new(src), &LogMapping::default()).unwrap();
        assert_eq!(report.rows_rejected, 1);
        assert_eq!(report.rejects[0].line, 3);
        assert_eq!(triples.len(), 8);
    }

    #[test]
    fn extra_columns_become_attributes() {
        let src = "event_id,timestamp,actor,activity,requestsize\nm1,2017-12-01T09:00:00Z,Tim,send,10\n";
        let (triples, _) = read_event_log(Cursor::new(src), &LogMapping::default()).unwrap();
        let g = ErGraph::build(triples).unwrap();
        assert_eq!(g.attribute_of(&NodeId::uri("m1"), "requestsize"), Some("10"));
    }

    #[test]
    fn missing_column_and_duplicates() {
        let src = "id,timestamp,actor,activity\n";
        assert!(matches!(
            read_event_log(Cursor::new(src), &LogMapping::default()),
            Err(IngestError::MissingColumn(c)) if c == "event_id"
        ));
        let src = log("e1,2017-12-01T09:00:00Z,Tim,A\ne1,2017-12-01T10:00:00Z,Tim,B\n");
        let (_, report) = read_event_log(Cursor::new(src), &LogMapping::default()).unwrap();
        assert_eq!(report.rows_rejected, 1);
    }

    #[test]
    fn mapping_config() {
        let m = LogMapping::parse("# c\ncol.event_id=case\ncol.timestamp = time\ntimefmt=%d/%m/%Y %H:%M\n").unwrap();
        assert_eq!(m.event_id, "case");
        assert_eq!(m.timestamp, "time");
        assert_eq!(m.time_format.as_deref(), Some("%d/%m/%Y %H:%M"));
        assert!(matches!(LogMapping::parse("nonsense"), Err(IngestError::Config { line: 1, .. })));
        assert!(LogMapping::parse("col.other=x").is_err());
    }

    fn events(times: &[(&str, &str)]) -> ErGraph {
        let mut triples = Vec::new();
        for (id, ts) in times {
            triples.push(Triple::attr(id, "type", "event"));
            triples.push(Triple::attr(id, "timestamp", ts));
        }
        ErGraph::build(triples).unwrap()
    }

    fn happened_before(g: &ErGraph) -> Vec<(String, String)> {
        g.triples()
            .filter(|t| t.predicate.as_str() == vocab::HAPPENED_BEFORE)
            .map(|t| (t.subject.id, t.object.id))
            .collect()
    }

    #[test]
    fn time_order_is_a_covering_chain() {
        let g = events(&[
            ("e3", "2017-12-01T03:00:00Z"),
            ("e1", "2017-12-01T01:00:00Z"),
            ("e2", "2017-12-01T02:00:00Z"),
        ]);
        let out = emit_time_order_edges(&g, None).unwrap();
        assert_eq!(
            happened_before(&out),
            [("e1".into(), "e2".into()), ("e2".into(), "e3".into())]
        );
    }

    #[test]
    fn time_order_edge_cases() {
        let single = events(&[("e1", "2017-12-01T01:00:00Z")]);
        assert!(happened_before(&emit_time_order_edges(&single, None).unwrap()).is_empty());

        let tie = events(&[("b", "2017-12-01T01:00:00Z"), ("a", "2017-12-01T01:00:00Z")]);
        assert_eq!(
            happened_before(&emit_time_order_edges(&tie, None).unwrap()),
            [("a".into(), "b".into())]
        );

        let g = crate::fixtures::banking();
        let err = emit_time_order_edges(&g, Some(&[NodeId::uri("Adam")])).unwrap_err();
        assert!(matches!(err, GraphError::NotAnEvent(..)));
    }
}

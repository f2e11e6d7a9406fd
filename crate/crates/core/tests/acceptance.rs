//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails for reasons other than the machine
//! having fewer cores than the speedup check needs.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use procgraph_core::fixtures;
use procgraph_core::graph::{text, ErGraph, GraphOptions, NodeId, Triple};
use procgraph_core::ingest;
use procgraph_core::path::{find_paths, FindOptions, PathRegex};
use procgraph_core::plan::{self, PlanOptions};
use procgraph_core::query::{parse, translate_entity, SelectStmt, StatementKind};
use procgraph_core::registry::AlgorithmRegistry;
use procgraph_core::session::Session;
use procgraph_core::summarize::{build_process_instances, discover_model, partition_by_correlation, CorrelationCondition};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Failure explained by too few CPU cores rather than by the engine.
    hardware_limited: bool,
}

impl Outcome {
    fn check(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            hardware_limited: false,
        }
    }
}

fn within(limit: Duration, started: Instant) -> (bool, String) {
    let took = started.elapsed();
    (took <= limit, format!("{:.2}s of {}s", took.as_secs_f64(), limit.as_secs()))
}

fn select_of(text: &str) -> SelectStmt {
    match parse(text).expect("corpus statement parses").kind {
        StatementKind::Select(s) => s,
        StatementKind::Entity(e) => translate_entity(&e),
        other => panic!("not a select: {other:?}"),
    }
}

fn loan_paths() -> Outcome {
    let started = Instant::now();
    let mut s = Session::new(fixtures::banking());
    let lines = |s: &mut Session, q: &str| -> BTreeSet<String> {
        s.execute(q).unwrap().lines().map(str::to_string).collect()
    };
    let staff = lines(&mut s, "relationship Adam (edge node)* assigned-to Staff");
    let manager = lines(&mut s, "relationship Adam (edge node)+ approved-by Manager");
    let artifacts = lines(&mut s, "relationship Adam (edge node)* edge Artifact");
    let want_staff = BTreeSet::from(["Adam ->(submitted)-> document ->(part-of)-> work-item ->(assigned-to)-> Staff".to_string()]);
    let want_manager = BTreeSet::from([
        "Adam ->(submitted)-> document ->(part-of)-> work-item ->(assigned-to)-> Staff ->(created)-> report ->(approved-by)-> Manager"
            .to_string(),
    ]);
    let want_artifacts = BTreeSet::from([
        "Adam ->(submitted)-> Home-Loan-Document".to_string(),
        "Adam ->(submitted)-> document ->(part-of)-> work-item ->(assigned-to)-> Staff ->(created)-> report".to_string(),
    ]);
    let (fast, time) = within(Duration::from_secs(1), started);
    Outcome::check(
        staff == want_staff && manager == want_manager && artifacts == want_artifacts && fast,
        format!("staff path: {}, manager path: {}, artifact paths: {}; {time}", staff.len(), manager.len(), artifacts.len()),
    )
}

fn metadata_filters() -> Outcome {
    let started = Instant::now();
    let mut s = Session::new(fixtures::evolution());
    let labels = |out: String| -> Vec<String> {
        out.lines().skip(1).map(|l| l.split('\t').next().unwrap().to_string()).collect()
    };
    let all = labels(s.execute("metadata evolutionOf Adam_loan_document_v2").unwrap());
    let filtered = labels(
        s.execute("metadata evolutionOf Adam_loan_document_v2 \\what='lifecycle' \\how='create'")
            .unwrap(),
    );
    let (fast, time) = within(Duration::from_secs(1), started);
    Outcome::check(
        all.len() == 3 && filtered == ["path#1", "path#2"] && fast,
        format!("unfiltered {} paths, filtered {:?}; {time}", all.len(), filtered),
    )
}

fn plan_shape() -> Outcome {
    let started = Instant::now();
    let g = ErGraph::build(fixtures::vendor_offer_review_triples(4, 2, 2)).unwrap();
    let lp = plan::plan_select(&select_of(fixtures::VENDOR_OFFER_REVIEW_QUERY), &g, &PlanOptions::default()).unwrap();
    let (stars, chains) = (lp.count("STARJOIN"), lp.count("CHAINJOIN"));
    let (fast, time) = within(Duration::from_secs(1), started);
    Outcome::check(
        stars == 3 && chains == 2 && fast,
        format!("{stars} STARJOIN, {chains} CHAINJOIN; {time}"),
    )
}

fn path_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let (mut agree, mut nonempty, mut multi_hop, mut max_edges) = (0, 0, 0, 0);
    let mut first_mismatch = None;
    const GRAPHS: usize = 200;
    const REGEXES_PER_GRAPH: usize = 3;
    for i in 0..GRAPHS {
        let dag = common::gen_dag(&mut rng, common::NODE_COUNT, 150, 3_000);
        max_edges = max_edges.max(dag.edges.len());
        let g = ErGraph::build(dag.triples.clone()).unwrap();
        for _ in 0..REGEXES_PER_GRAPH {
            let rx = common::gen_regex(&mut rng, 3, common::NODE_COUNT);
            let re = PathRegex::compile(&rx.render()).unwrap();
            let got = find_paths(&g, &re, &FindOptions::default()).unwrap();
            let expected = common::oracle_paths(&dag, &rx);
            if got == expected {
                agree += 1;
            } else if first_mismatch.is_none() {
                first_mismatch = Some(format!("graph {i}, regex {}", rx.render()));
            }
            nonempty += usize::from(!expected.is_empty());
            multi_hop += usize::from(expected.iter().any(|p| p.hops() >= 2));
        }
    }
    let total = GRAPHS * REGEXES_PER_GRAPH;
    let (fast, time) = within(Duration::from_secs(60), started);
    let mut detail = format!(
        "{agree}/{total} agree over {GRAPHS} graphs (max {max_edges} edges; {nonempty} non-empty, {multi_hop} with multi-hop paths); {time}"
    );
    if let Some(m) = first_mismatch {
        detail.push_str(&format!("; first mismatch: {m}"));
    }
    Outcome::check(agree == total && fast, detail)
}

fn plan_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let queries: Vec<SelectStmt> = common::MARKET_QUERIES.iter().map(|q| select_of(q)).collect();
    let (mut agree, mut parallel_same, mut nonempty) = (0, 0, 0);
    let mut first_mismatch = None;
    const GRAPHS: usize = 100;
    for i in 0..GRAPHS {
        let triples = common::gen_market(&mut rng);
        let g = ErGraph::build(triples.clone()).unwrap();
        for (q, stmt) in queries.iter().enumerate() {
            let expected = common::naive_select(&triples, stmt);
            let (seq, _) = plan::run_select(stmt, &g, &PlanOptions::default()).unwrap();
            let (par, _) = plan::run_select(stmt, &g, &PlanOptions::default().with_parallelism(8)).unwrap();
            let mut rows = seq.rows.clone();
            rows.sort();
            rows.dedup();
            if rows == expected {
                agree += 1;
            } else if first_mismatch.is_none() {
                first_mismatch = Some(format!("graph {i}, query {q}"));
            }
            parallel_same += usize::from(seq == par);
            nonempty += usize::from(!expected.is_empty());
        }
    }
    let total = GRAPHS * queries.len();
    let (fast, time) = within(Duration::from_secs(120), started);
    let mut detail = format!(
        "{agree}/{total} match the naive matcher, {parallel_same}/{total} identical at parallelism 1 and 8 ({} queries, {nonempty} non-empty results); {time}",
        queries.len()
    );
    if let Some(m) = first_mismatch {
        detail.push_str(&format!("; first mismatch: {m}"));
    }
    Outcome::check(agree == total && parallel_same == total && fast, detail)
}

fn correlation_laws() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let registry = AlgorithmRegistry::with_builtins();
    let mut problems = Vec::new();
    let (mut logs, mut events_seen) = (0, 0);
    for round in 0..20 {
        let max_events = if round == 0 { 5_000 } else { rng.gen_range(1..=5_000) };
        let events = common::gen_log(&mut rng, max_events, 50);
        events_seen += events.len();
        logs += 1;
        let g = ErGraph::build(common::log_triples(&events)).unwrap();
        let folders =
            partition_by_correlation(&g, &CorrelationCondition::attr_eq("order", "order"), None, &registry, 1)
                .unwrap();
        let expected = common::group_by_key(&events);
        let mut seen: BTreeSet<NodeId> = BTreeSet::new();
        let mut disjoint = true;
        let mut cards = true;
        for f in &folders {
            for m in &f.members {
                disjoint &= seen.insert(m.clone());
            }
            let key = f.name.strip_prefix("order=").unwrap_or("");
            cards &= expected.get(key).map(BTreeSet::len) == Some(f.len());
        }
        let keyed: BTreeSet<NodeId> = events
            .iter()
            .filter(|e| e.key.is_some())
            .map(|e| NodeId::uri(e.id.as_str()))
            .collect();
        let covering = seen == keyed && folders.len() == expected.len();
        let instances = build_process_instances(&g, &folders).unwrap();
        let model = discover_model(&instances, "dfg", &registry).unwrap();
        let mut occ = BTreeMap::new();
        for e in events.iter().filter(|e| e.key.is_some()) {
            *occ.entry(e.activity.clone()).or_insert(0) += 1;
        }
        let flow = common::check_flow(&model, &occ);
        if !(disjoint && covering && cards) || flow.is_err() {
            problems.push(format!(
                "log {round}: disjoint={disjoint} covering={covering} cardinalities={cards} flow={flow:?}"
            ));
        }
    }
    let (fast, time) = within(Duration::from_secs(30), started);
    let mut detail = format!("{logs} logs, {events_seen} events: disjoint, covering, group-by cardinalities, DFG flow conservation");
    if !problems.is_empty() {
        detail = format!("{}; {}", problems.len(), problems.join("; "));
    }
    Outcome::check(problems.is_empty() && fast, format!("{detail}; {time}"))
}

fn desk_scale() -> Outcome {
    let started = Instant::now();
    // 3 + 10 * (3 + 3 * 3) = 123 triples per vendor
    let triples = fixtures::vendor_offer_review_triples(814, 10, 3);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("market.tsv");
    text::write_triples(std::fs::File::create(&file).unwrap(), &triples).unwrap();
    let (g, report) = ingest::load_triple_file(&file, GraphOptions::default()).unwrap();
    let stmt = select_of(fixtures::VENDOR_OFFER_REVIEW_QUERY);
    let run = |p: usize| {
        let (table, stats) = plan::run_select(&stmt, &g, &PlanOptions::default().with_parallelism(p)).unwrap();
        (table, stats.join_time())
    };
    let (rows, _) = run(1);
    let end_to_end = started.elapsed();
    let best = |p: usize| (0..3).map(|_| run(p).1).min().unwrap();
    let (t1, t4) = (best(1), best(4));
    let speedup = t1.as_secs_f64() / t4.as_secs_f64().max(1e-9);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let in_time = end_to_end <= Duration::from_secs(30);
    let fast_enough = speedup >= 1.5;
    let mut detail = format!(
        "{} triples ingested, {} rows, end-to-end {:.2}s of 30s; join stage {:.1}ms at p=1, {:.1}ms at p=4, speedup {speedup:.2}x (need 1.5x) on {cores} core(s)",
        report.triples_emitted,
        rows.len(),
        end_to_end.as_secs_f64(),
        t1.as_secs_f64() * 1e3,
        t4.as_secs_f64() * 1e3,
    );
    let hardware_limited = in_time && !fast_enough && cores < 4;
    if hardware_limited {
        detail.push_str("; speedup unreachable with fewer than 4 cores");
    }
    Outcome {
        pass: in_time && fast_enough && report.triples_emitted >= 100_000,
        detail,
        hardware_limited,
    }
}

fn snapshot_immutability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0008);
    let dir = tempfile::tempdir().unwrap();
    let mut base = fixtures::vendor_offer_review_triples(6, 3, 2);
    base.extend(common::gen_market(&mut rng));
    let script = format!(
        "{};\n{};\nrelationship node review-of node offered-by node;\nentity vendor \\country='Australia'",
        fixtures::VENDOR_OFFER_REVIEW_QUERY,
        fixtures::MESSAGE_QUERY
    );
    let mut s = Session::open(Some(dir.path()), GraphOptions::default()).unwrap();
    s.load_graph(&ErGraph::build(base).unwrap()).unwrap();
    let before = s.run_script(&script).unwrap();

    for i in 0..100 {
        let current: Vec<Triple> = s.graph().triples().collect();
        let k = rng.gen_range(0..4);
        let remove: Vec<Triple> = current.into_iter().choose_multiple(&mut rng, k);
        let add = vec![
            Triple::attr(&format!("vendor-{}", rng.gen_range(0..6)), "country", "Australia"),
            Triple::attr(&format!("offer-{}-0", rng.gen_range(0..6)), "delivery-days", &rng.gen_range(1..40).to_string()),
            Triple::link(&format!("new-offer-{i}"), "offered-by", &format!("vendor-{}", rng.gen_range(0..6))),
        ];
        s.commit(&add, &remove).unwrap();
    }
    let head = s.snapshot();
    let at_head = s.run_script(&script).unwrap();
    s.use_snapshot(1).unwrap();
    let pinned = s.run_script(&script).unwrap();
    let mut reopened = Session::open(Some(dir.path()), GraphOptions::default()).unwrap();
    reopened.use_snapshot(1).unwrap();
    let from_disk = reopened.run_script(&script).unwrap();
    let identical = pinned == before && from_disk == before;
    Outcome::check(
        identical && head == 101 && at_head != before,
        format!(
            "100 commits (head {head}, output there differs: {}); snapshot 1 output {} bytes, byte-identical in memory: {}, after reopening: {}",
            at_head != before,
            before.len(),
            pinned == before,
            from_disk == before
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("loan scenario paths", loan_paths),
        ("metadata filters", metadata_filters),
        ("plan shape", plan_shape),
        ("path engine oracle equivalence", path_oracle),
        ("plan vs naive matcher", plan_oracle),
        ("correlation partition laws", correlation_laws),
        ("desk-scale throughput", desk_scale),
        ("snapshot immutability", snapshot_immutability),
    ];
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut blocking = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::check(false, format!("panicked: {msg}"))
        });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} ({name}): {verdict}: {}", i + 1, outcome.detail);
        std::io::stdout().flush().ok();
        if !outcome.pass && !outcome.hardware_limited {
            blocking += 1;
        }
    }
    panic::set_hook(hook);
    if blocking > 0 {
        std::process::exit(1);
    }
}

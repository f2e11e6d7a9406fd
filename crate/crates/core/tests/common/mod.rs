//! Generators and reference implementations shared by the integration and
//! acceptance tests. The oracles deliberately avoid the engine's indexes,
//! automata and join code.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use procgraph_core::graph::{compare_values, values_equal, NodeId, Triple};
use procgraph_core::path::Path;
use procgraph_core::summarize::ProcessModel;
use procgraph_core::query::{CmpOp, FilterExpr, Operand, PatternTerm, SelectStmt};
use rand::seq::SliceRandom;
use rand::Rng;

// ---- path regexes ----

#[derive(Debug, Clone)]
pub enum NodeTest {
    Any,
    /// Bare word: id, or type ignoring ASCII case.
    Word(String),
    Quoted(String),
    Type(String),
}

#[derive(Debug, Clone)]
pub enum Rx {
    Node(NodeTest),
    Edge(Option<String>),
    Seq(Vec<Rx>),
    Alt(Vec<Rx>),
    Rep(Box<Rx>, char),
}

impl Rx {
    pub fn render(&self) -> String {
        match self {
            Rx::Node(NodeTest::Any) => "node".into(),
            Rx::Node(NodeTest::Word(w)) => w.clone(),
            Rx::Node(NodeTest::Quoted(w)) => format!("'{w}'"),
            Rx::Node(NodeTest::Type(t)) => format!("@type={t}"),
            Rx::Edge(None) => "edge".into(),
            Rx::Edge(Some(p)) => p.clone(),
            Rx::Seq(items) => items.iter().map(Rx::render).collect::<Vec<_>>().join(" "),
            Rx::Alt(items) => format!(
                "({})",
                items.iter().map(Rx::render).collect::<Vec<_>>().join(" | ")
            ),
            Rx::Rep(inner, q) => format!("({}){q}", inner.render()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Rx::Node(_) | Rx::Edge(_) => 0,
            Rx::Seq(items) => items.iter().map(Rx::depth).max().unwrap_or(0),
            Rx::Alt(items) => 1 + items.iter().map(Rx::depth).max().unwrap_or(0),
            Rx::Rep(inner, _) => 1 + inner.depth(),
        }
    }
}

pub const NODE_COUNT: usize = 50;
const PREDICATES: [&str; 3] = ["p0", "p1", "p2"];
const TYPES: [&str; 3] = ["t0", "t1", "t2"];

pub fn node_name(i: usize) -> String {
    format!("n{i:02}")
}

fn gen_node_test(rng: &mut impl Rng, nodes: usize) -> NodeTest {
    match rng.gen_range(0..10) {
        0..=3 => NodeTest::Any,
        4 | 5 => NodeTest::Word(node_name(rng.gen_range(0..nodes))),
        6 => NodeTest::Quoted(node_name(rng.gen_range(0..nodes))),
        7 => NodeTest::Word(TYPES[rng.gen_range(0..TYPES.len())].to_ascii_uppercase()),
        _ => NodeTest::Type(TYPES[rng.gen_range(0..TYPES.len())].into()),
    }
}

fn gen_edge(rng: &mut impl Rng) -> Rx {
    if rng.gen_bool(0.5) {
        Rx::Edge(None)
    } else {
        Rx::Edge(Some(PREDICATES[rng.gen_range(0..PREDICATES.len())].into()))
    }
}

/// One or more whole `edge node` steps, nesting at most `depth` groups.
fn gen_steps(rng: &mut impl Rng, depth: usize, nodes: usize) -> Vec<Rx> {
    let count = rng.gen_range(1..=2);
    let mut out = Vec::new();
    for _ in 0..count {
        if depth > 0 && rng.gen_bool(0.45) {
            if rng.gen_bool(0.3) {
                let branches = (0..2).map(|_| Rx::Seq(gen_steps(rng, depth - 1, nodes))).collect();
                out.push(Rx::Alt(branches));
            } else {
                let q = ['*', '+', '?'][rng.gen_range(0..3)];
                out.push(Rx::Rep(Box::new(Rx::Seq(gen_steps(rng, depth - 1, nodes))), q));
            }
        } else {
            out.push(gen_edge(rng));
            out.push(Rx::Node(gen_node_test(rng, nodes)));
        }
    }
    out
}

/// Random well-formed path regex with nesting depth at most `max_depth`.
pub fn gen_regex(rng: &mut impl Rng, max_depth: usize, nodes: usize) -> Rx {
    let first = if max_depth > 0 && rng.gen_bool(0.15) {
        Rx::Alt(vec![
            Rx::Node(gen_node_test(rng, nodes)),
            Rx::Node(gen_node_test(rng, nodes)),
        ])
    } else {
        Rx::Node(gen_node_test(rng, nodes))
    };
    let mut items = vec![first];
    if rng.gen_bool(0.85) {
        items.extend(gen_steps(rng, max_depth, nodes));
    }
    Rx::Seq(items)
}

/// A relationship graph as plain triples plus the facts the oracle needs.
#[derive(Debug, Clone)]
pub struct RandomDag {
    pub triples: Vec<Triple>,
    pub edges: Vec<(String, String, String)>,
    pub types: HashMap<String, String>,
    pub vertices: BTreeSet<String>,
}

fn count_paths(n: usize, adj: &[Vec<usize>], order: &[usize]) -> u64 {
    // order is a topological order; walk it backwards
    let mut from = vec![1u64; n];
    for &v in order.iter().rev() {
        from[v] = 1 + adj[v].iter().map(|&w| from[w]).sum::<u64>();
    }
    from.iter().sum()
}

/// Random DAG with at most `max_nodes` nodes and `max_edges` relationship
/// edges, keeping the total number of paths under `path_cap` so that
/// exhaustive enumeration stays cheap.
pub fn gen_dag(rng: &mut impl Rng, max_nodes: usize, max_edges: usize, path_cap: u64) -> RandomDag {
    let n = rng.gen_range(2..=max_nodes);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let rank: Vec<usize> = {
        let mut r = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            r[v] = i;
        }
        r
    };
    let target = rng.gen_range(0..=max_edges);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for _ in 0..target * 3 {
        if edges.len() >= target {
            break;
        }
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a == b {
            continue;
        }
        let (s, o) = if rank[a] < rank[b] { (a, b) } else { (b, a) };
        let p = rng.gen_range(0..PREDICATES.len());
        if !seen.insert((s, p, o)) {
            continue;
        }
        adj[s].push(o);
        if count_paths(n, &adj, &order) > path_cap {
            adj[s].pop();
            continue;
        }
        edges.push((node_name(s), PREDICATES[p].to_string(), node_name(o)));
    }
    let mut types = HashMap::new();
    let mut triples = Vec::new();
    let mut vertices = BTreeSet::new();
    for (s, p, o) in &edges {
        triples.push(Triple::link(s, p, o));
        vertices.insert(s.clone());
        vertices.insert(o.clone());
    }
    for i in 0..n {
        if rng.gen_bool(0.7) {
            let t = TYPES[rng.gen_range(0..TYPES.len())];
            types.insert(node_name(i), t.to_string());
            triples.push(Triple::attr(&node_name(i), "type", t));
            vertices.insert(node_name(i));
        }
    }
    RandomDag {
        triples,
        edges,
        types,
        vertices,
    }
}

#[derive(Debug, Clone, Copy)]
enum Tok<'a> {
    Node(&'a str),
    Edge(&'a str),
}

fn node_ok(test: &NodeTest, id: &str, types: &HashMap<String, String>) -> bool {
    let ty = types.get(id);
    match test {
        NodeTest::Any => true,
        NodeTest::Word(w) => id == w || ty.is_some_and(|t| t.eq_ignore_ascii_case(w)),
        NodeTest::Quoted(w) => id == w,
        NodeTest::Type(t) => ty == Some(t),
    }
}

/// Positions reachable after matching `rx` from `pos`.
fn ends(rx: &Rx, toks: &[Tok], pos: usize, types: &HashMap<String, String>) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    match rx {
        Rx::Node(t) => {
            if let Some(Tok::Node(id)) = toks.get(pos) {
                if node_ok(t, id, types) {
                    out.insert(pos + 1);
                }
            }
        }
        Rx::Edge(p) => {
            if let Some(Tok::Edge(e)) = toks.get(pos) {
                if p.as_deref().is_none_or(|p| p == *e) {
                    out.insert(pos + 1);
                }
            }
        }
        Rx::Seq(items) => {
            let mut cur = BTreeSet::from([pos]);
            for item in items {
                cur = cur.iter().flat_map(|&p| ends(item, toks, p, types)).collect();
            }
            out = cur;
        }
        Rx::Alt(items) => {
            for item in items {
                out.extend(ends(item, toks, pos, types));
            }
        }
        Rx::Rep(inner, q) => {
            let first: BTreeSet<usize> = match q {
                '+' => ends(inner, toks, pos, types),
                _ => BTreeSet::from([pos]),
            };
            if *q == '?' {
                out = first;
                out.extend(ends(inner, toks, pos, types));
            } else {
                let mut frontier: Vec<usize> = first.iter().copied().collect();
                out = first;
                while let Some(p) = frontier.pop() {
                    for e in ends(inner, toks, p, types) {
                        if out.insert(e) {
                            frontier.push(e);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Exhaustive DFS over every path of the DAG, kept when the recursive
/// matcher accepts its token string. Sorted.
pub fn oracle_paths(dag: &RandomDag, rx: &Rx) -> Vec<Path> {
    let mut adj: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
    for (s, p, o) in &dag.edges {
        adj.entry(s).or_default().push((p, o));
    }
    let mut out = Vec::new();
    fn dfs<'a>(
        node: &'a str,
        toks: &mut Vec<Tok<'a>>,
        adj: &BTreeMap<&'a str, Vec<(&'a str, &'a str)>>,
        rx: &Rx,
        types: &HashMap<String, String>,
        out: &mut Vec<Path>,
    ) {
        if ends(rx, toks, 0, types).contains(&toks.len()) {
            let Tok::Node(first) = toks[0] else { unreachable!() };
            let mut path = Path::new(NodeId::uri(first));
            for pair in toks[1..].chunks(2) {
                if let [Tok::Edge(p), Tok::Node(n)] = pair {
                    path.push(NodeId::uri(*p), NodeId::uri(*n));
                }
            }
            out.push(path);
        }
        for &(p, o) in adj.get(node).map(Vec::as_slice).unwrap_or(&[]) {
            toks.push(Tok::Edge(p));
            toks.push(Tok::Node(o));
            dfs(o, toks, adj, rx, types, out);
            toks.truncate(toks.len() - 2);
        }
    }
    for v in &dag.vertices {
        let mut toks = vec![Tok::Node(v.as_str())];
        dfs(v, &mut toks, &adj, rx, &dag.types, &mut out);
    }
    out.sort();
    out
}

// ---- select queries ----

/// Vendors, offers, reviews and messages, at most 200 triples.
pub fn gen_market(rng: &mut impl Rng) -> Vec<Triple> {
    let mut t = Vec::new();
    let vendors = rng.gen_range(1..=4);
    let countries = ["Australia", "France", "Chile"];
    let products = ["home-loan", "fixed-rate", "savings"];
    for v in 0..vendors {
        let id = format!("vendor-{v}");
        t.push(Triple::attr(&id, "type", "vendor"));
        t.push(Triple::attr(&id, "country", countries[rng.gen_range(0..3)]));
        t.push(Triple::attr(&id, "name", &format!("Bank {}", rng.gen_range(0..3))));
    }
    let offers = rng.gen_range(0..=8);
    for o in 0..offers {
        let id = format!("offer-{o}");
        t.push(Triple::attr(&id, "type", "offer"));
        t.push(Triple::link(&id, "offered-by", &format!("vendor-{}", rng.gen_range(0..vendors))));
        t.push(Triple::attr(&id, "product", products[rng.gen_range(0..3)]));
        t.push(Triple::attr(&id, "delivery-days", &rng.gen_range(1..=30).to_string()));
    }
    if offers > 0 {
        for r in 0..rng.gen_range(0..=10) {
            let id = format!("review-{r}");
            t.push(Triple::attr(&id, "type", "review"));
            t.push(Triple::link(&id, "review-of", &format!("offer-{}", rng.gen_range(0..offers))));
            if rng.gen_bool(0.5) {
                t.push(Triple::link(&id, "mentions", &format!("vendor-{}", rng.gen_range(0..vendors))));
            }
            t.push(Triple::attr(&id, "rating", &rng.gen_range(1..=5).to_string()));
            t.push(Triple::attr(&id, "text", &format!("text {}", rng.gen_range(0..4))));
        }
    }
    for m in 0..rng.gen_range(0..=12) {
        let id = format!("msg-{m:02}");
        t.push(Triple::attr(&id, "type", "message"));
        t.push(Triple::attr(&id, "requestsize", &(10 * rng.gen_range(1..=3)).to_string()));
        t.push(Triple::attr(&id, "responsesize", &(10 * rng.gen_range(1..=3)).to_string()));
        let (month, day) = if rng.gen_bool(0.6) { (12, rng.gen_range(1..=31)) } else { (1, rng.gen_range(1..=28)) };
        let year = if month == 12 { 2017 } else { 2018 };
        t.push(Triple::attr(
            &id,
            "timestamp",
            &format!("{year}-{month:02}-{day:02}T{:02}:00:00.000Z", rng.gen_range(0..24)),
        ));
        if m > 0 && rng.gen_bool(0.5) {
            t.push(Triple::link(&id, "replied-to", &format!("msg-{:02}", rng.gen_range(0..m))));
        }
    }
    assert!(t.len() <= 200);
    t
}

/// Select and entity statements over the market schema.
pub const MARKET_QUERIES: &[&str] = &[
    procgraph_core::fixtures::VENDOR_OFFER_REVIEW_QUERY,
    procgraph_core::fixtures::MESSAGE_QUERY,
    "select ?v where { ?v @type 'vendor' }",
    "select ?o ?v where { ?o offered-by ?v }",
    "select ?r ?v where { ?r review-of ?o . ?o offered-by ?v }",
    "select ?v ?n where { ?v @type 'vendor' . ?v @name ?n . ?v @country 'Australia' }",
    "select ?o ?d where { ?o @delivery-days ?d . FILTER (?d > 10 && ?d <= 20) }",
    "select ?r where { ?r @rating ?x . FILTER (?x = 5 || ?x = '1') }",
    "select ?s ?p ?o where { ?s ?p ?o . ?o @type 'vendor' }",
    "select ?a ?b where { ?a replied-to ?b . ?b replied-to ?c }",
    "select ?r ?v where { ?r mentions ?v . ?r review-of ?o . ?o offered-by ?v }",
    "select ?o ?p where { ?o @product ?p . FILTER (!(?p = 'home-loan')) }",
    "select ?v ?c where { ?v @country ?c . FILTER (?c != 'Australia') }",
    "entity vendor \\country='Australia'",
    "entity offer \\delivery-days<10 OR \\product='fixed-rate'",
    "entity message \\requestsize=20 AND NOT \\responsesize=20",
    "select ?m ?t where { ?m @timestamp ?t . ?m @type 'message' . FILTER (?t >= '2018-01-01T00:00:00Z') }",
    "select ?o1 ?o2 where { ?o1 offered-by ?v . ?o2 offered-by ?v . ?o1 @product ?p . ?o2 @product ?p . FILTER (?o1 != ?o2) }",
    "select ?x ?y where { ?r review-of ?o . ?r @rating ?x . ?o @delivery-days ?y . FILTER (?x > ?y) }",
    "select ?p where { ?o @product ?p }",
];

fn op_holds(op: CmpOp, a: &str, b: &str) -> bool {
    let ord = compare_values(a, b);
    match op {
        CmpOp::Eq => values_equal(a, b),
        CmpOp::Ne => !values_equal(a, b),
        CmpOp::Lt => ord == Ordering::Less,
        CmpOp::Le => ord != Ordering::Greater,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Ge => ord != Ordering::Less,
    }
}

fn filter_holds(f: &FilterExpr, b: &HashMap<String, NodeId>) -> bool {
    let val = |o: &Operand| match o {
        Operand::Var(v) => b.get(v).map(|n| n.as_str().to_string()),
        Operand::Value(s) => Some(s.clone()),
    };
    match f {
        FilterExpr::Cmp(x, op, y) => match (val(x), val(y)) {
            (Some(x), Some(y)) => op_holds(*op, &x, &y),
            _ => false,
        },
        FilterExpr::And(x, y) => filter_holds(x, b) && filter_holds(y, b),
        FilterExpr::Or(x, y) => filter_holds(x, b) || filter_holds(y, b),
        FilterExpr::Not(x) => !filter_holds(x, b),
    }
}

fn unify(term: &PatternTerm, value: &NodeId, b: &mut HashMap<String, NodeId>, bound: &mut Vec<String>) -> bool {
    match term {
        PatternTerm::Node(n) => n == value,
        PatternTerm::Var(v) => match b.get(v) {
            Some(x) => x == value,
            None => {
                b.insert(v.clone(), value.clone());
                bound.push(v.clone());
                true
            }
        },
    }
}

/// Backtracking evaluation straight over the triple list; sorted distinct rows.
pub fn naive_select(triples: &[Triple], stmt: &SelectStmt) -> Vec<Vec<NodeId>> {
    let mut unique: Vec<&Triple> = triples.iter().collect();
    unique.sort();
    unique.dedup();
    let mut rows = BTreeSet::new();
    fn go(
        i: usize,
        stmt: &SelectStmt,
        triples: &[&Triple],
        b: &mut HashMap<String, NodeId>,
        rows: &mut BTreeSet<Vec<NodeId>>,
    ) {
        if i == stmt.patterns.len() {
            if stmt.filter.as_ref().is_none_or(|f| filter_holds(f, b)) {
                rows.insert(stmt.projection.iter().map(|v| b[v].clone()).collect());
            }
            return;
        }
        let pat = &stmt.patterns[i];
        for t in triples {
            let mut bound = Vec::new();
            let ok = unify(&pat.subject, &t.subject, b, &mut bound)
                && unify(&pat.predicate, &t.predicate, b, &mut bound)
                && unify(&pat.object, &t.object, b, &mut bound);
            if ok {
                go(i + 1, stmt, triples, b, rows);
            }
            for v in bound {
                b.remove(&v);
            }
        }
    }
    go(0, stmt, &unique, &mut HashMap::new(), &mut rows);
    rows.into_iter().collect()
}

// ---- event logs ----

#[derive(Debug, Clone)]
pub struct LogEvent {
    pub id: String,
    pub key: Option<String>,
    pub activity: String,
    /// Seconds since an arbitrary origin.
    pub at: u32,
}

pub const ACTIVITIES: [&str; 6] = ["receive", "check", "approve", "reject", "notify", "archive"];

pub fn gen_log(rng: &mut impl Rng, max_events: usize, max_keys: usize) -> Vec<LogEvent> {
    let n = rng.gen_range(1..=max_events);
    let keys = rng.gen_range(1..=max_keys);
    (0..n)
        .map(|i| LogEvent {
            id: format!("ev{i:05}"),
            key: rng.gen_bool(0.95).then(|| format!("k{}", rng.gen_range(0..keys))),
            activity: ACTIVITIES[rng.gen_range(0..ACTIVITIES.len())].to_string(),
            at: rng.gen_range(0..100_000),
        })
        .collect()
}

pub fn log_timestamp(at: u32) -> String {
    let d = chrono::DateTime::from_timestamp(1_500_000_000 + at as i64, 0).unwrap();
    d.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn log_triples(events: &[LogEvent]) -> Vec<Triple> {
    let mut t = Vec::new();
    for e in events {
        t.push(Triple::attr(&e.id, "type", "event"));
        t.push(Triple::attr(&e.id, "activity", &e.activity));
        t.push(Triple::attr(&e.id, "timestamp", &log_timestamp(e.at)));
        if let Some(k) = &e.key {
            t.push(Triple::attr(&e.id, "order", k));
        }
    }
    t
}

/// key -> member ids, by a plain group-by.
pub fn group_by_key(events: &[LogEvent]) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for e in events {
        if let Some(k) = &e.key {
            out.entry(k.clone()).or_default().insert(e.id.clone());
        }
    }
    out
}

/// Directly-follows counts from per-key traces ordered by (time, id).
pub fn dfg_oracle(events: &[LogEvent]) -> BTreeMap<(String, String), usize> {
    let mut traces: BTreeMap<&str, Vec<&LogEvent>> = BTreeMap::new();
    for e in events {
        if let Some(k) = &e.key {
            traces.entry(k).or_default().push(e);
        }
    }
    let mut out = BTreeMap::new();
    for trace in traces.values_mut() {
        trace.sort_by(|a, b| a.at.cmp(&b.at).then_with(|| a.id.cmp(&b.id)));
        for w in trace.windows(2) {
            *out.entry((w[0].activity.clone(), w[1].activity.clone())).or_default() += 1;
        }
    }
    out
}

/// starts + inflow == occurrences == ends + outflow, for every activity.
pub fn check_flow(model: &ProcessModel, occurrences: &BTreeMap<String, usize>) -> Result<(), String> {
    for (a, &n) in occurrences {
        let inflow: usize = model.edges.iter().filter(|e| &e.to == a).map(|e| e.count).sum();
        let outflow: usize = model.edges.iter().filter(|e| &e.from == a).map(|e| e.count).sum();
        let starts = model.starts.get(a).copied().unwrap_or(0);
        let ends = model.ends.get(a).copied().unwrap_or(0);
        if starts + inflow != n || ends + outflow != n {
            return Err(format!("{a}: {starts}+{inflow} in, {ends}+{outflow} out, {n} seen"));
        }
    }
    Ok(())
}

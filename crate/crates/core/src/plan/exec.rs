//! Partition-parallel plan executor.
//!
//! Every stage splits its input into independent partitions, evaluates
//! them on a worker pool and merges the outputs by sorting full rows, so
//! results do not depend on the number of workers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::graph::{ErGraph, TermId};
use crate::query::{CmpOp, FilterExpr, Operand, PatternTerm, TriplePattern};

use super::logical::{LogicalPlan, Operator};
use super::table::{BindingTable, Relation};
use super::{PlanError, PlanOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageStats {
    pub operator: &'static str,
    /// Output rows, or triples read for LOAD and SPLIT.
    pub rows: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecStats {
    pub stages: Vec<StageStats>,
    pub elapsed: Duration,
}

impl ExecStats {
    /// Time spent in STARJOIN and CHAINJOIN stages.
    pub fn join_time(&self) -> Duration {
        self.stages
            .iter()
            .filter(|s| matches!(s.operator, "STARJOIN" | "CHAINJOIN"))
            .map(|s| s.elapsed)
            .sum()
    }
}

fn worker_pool(threads: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let pools = POOLS.get_or_init(Default::default);
    let mut pools = pools.lock().unwrap_or_else(|e| e.into_inner());
    pools
        .entry(threads)
        .or_insert_with(|| {
            Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .thread_name(move |i| format!("plan-{threads}-{i}"))
                    .build()
                    .expect("worker pool"),
            )
        })
        .clone()
}

struct Ctx<'g> {
    g: &'g ErGraph,
    pool: Option<Arc<ThreadPool>>,
    parts: usize,
    deadline: Option<(Instant, Duration)>,
}

impl<'g> Ctx<'g> {
    fn new(g: &'g ErGraph, options: &PlanOptions) -> Self {
        let workers = options.parallelism.max(1);
        Self {
            g,
            pool: (workers > 1).then(|| worker_pool(workers)),
            parts: if workers > 1 { workers * 4 } else { 1 },
            deadline: options.timeout.map(|t| (Instant::now() + t, t)),
        }
    }

    fn check(&self) -> Result<(), PlanError> {
        match self.deadline {
            Some((at, limit)) if Instant::now() >= at => Err(PlanError::EvaluationTimeout(limit)),
            _ => Ok(()),
        }
    }

    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        match &self.pool {
            Some(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
            None => items.into_iter().map(f).collect(),
        }
    }

    /// Like `map`, stopping at the first error.
    fn try_map<T, R, F>(&self, items: Vec<T>, f: F) -> Result<Vec<R>, PlanError>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> Result<R, PlanError> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

fn bucket(key: impl IntoIterator<Item = TermId>, parts: usize) -> usize {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for t in key {
        h = (h ^ t.0 as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        h ^= h >> 29;
    }
    (h % parts as u64) as usize
}

// ---- filters ----

enum Arg {
    Col(usize),
    Value(String),
    Unbound,
}

enum Compiled {
    Cmp(Arg, CmpOp, Arg),
    And(Box<Compiled>, Box<Compiled>),
    Or(Box<Compiled>, Box<Compiled>),
    Not(Box<Compiled>),
}

impl Compiled {
    fn new(expr: &FilterExpr, vars: &[String]) -> Self {
        let arg = |o: &Operand| match o {
            Operand::Var(v) => vars
                .iter()
                .position(|x| x == v)
                .map_or(Arg::Unbound, Arg::Col),
            Operand::Value(s) => Arg::Value(s.clone()),
        };
        match expr {
            FilterExpr::Cmp(a, op, b) => Compiled::Cmp(arg(a), *op, arg(b)),
            FilterExpr::And(a, b) => {
                Compiled::And(Box::new(Self::new(a, vars)), Box::new(Self::new(b, vars)))
            }
            FilterExpr::Or(a, b) => {
                Compiled::Or(Box::new(Self::new(a, vars)), Box::new(Self::new(b, vars)))
            }
            FilterExpr::Not(a) => Compiled::Not(Box::new(Self::new(a, vars))),
        }
    }

    fn holds(&self, g: &ErGraph, row: &[TermId]) -> bool {
        fn value<'a>(a: &'a Arg, g: &'a ErGraph, row: &[TermId]) -> Option<&'a str> {
            match a {
                Arg::Col(i) => Some(g.term(row[*i]).as_str()),
                Arg::Value(s) => Some(s.as_str()),
                Arg::Unbound => None,
            }
        }
        match self {
            Compiled::Cmp(a, op, b) => match (value(a, g, row), value(b, g, row)) {
                (Some(x), Some(y)) => op.holds(x, y),
                _ => false,
            },
            Compiled::And(a, b) => a.holds(g, row) && b.holds(g, row),
            Compiled::Or(a, b) => a.holds(g, row) || b.holds(g, row),
            Compiled::Not(a) => !a.holds(g, row),
        }
    }
}

/// Left and right rows hashed to one partition.
type Bucket<'a> = (Vec<&'a [TermId]>, Vec<&'a [TermId]>);

// ---- star join ----

#[derive(Clone, Copy)]
enum Slot {
    Const(TermId),
    Var(usize),
}

#[derive(Clone, Copy)]
enum Access<'g> {
    Pred(TermId, &'g [(TermId, TermId)]),
    All(&'g [[TermId; 3]]),
}

impl<'g> Access<'g> {
    fn len(&self) -> usize {
        match self {
            Access::Pred(_, rows) => rows.len(),
            Access::All(rows) => rows.len(),
        }
    }

    fn subject(&self, i: usize) -> TermId {
        match self {
            Access::Pred(_, rows) => rows[i].0,
            Access::All(rows) => rows[i][0],
        }
    }

    /// Rows whose subject is `s`.
    fn range(&self, s: TermId) -> Access<'g> {
        match *self {
            Access::Pred(p, rows) => {
                let lo = rows.partition_point(|r| r.0 < s);
                let hi = lo + rows[lo..].partition_point(|r| r.0 == s);
                Access::Pred(p, &rows[lo..hi])
            }
            Access::All(rows) => {
                let lo = rows.partition_point(|r| r[0] < s);
                let hi = lo + rows[lo..].partition_point(|r| r[0] == s);
                Access::All(&rows[lo..hi])
            }
        }
    }

    fn edge(&self, i: usize) -> (TermId, TermId) {
        match self {
            Access::Pred(p, rows) => (*p, rows[i].1),
            Access::All(rows) => (rows[i][1], rows[i][2]),
        }
    }
}

struct StarPattern<'g> {
    access: Access<'g>,
    pred: Slot,
    obj: Slot,
}

struct Star<'g> {
    subject: Slot,
    patterns: Vec<StarPattern<'g>>,
    width: usize,
    filter: Option<Compiled>,
}

impl<'g> Star<'g> {
    /// `None` when a constant of the block does not occur in the graph.
    fn new(
        g: &'g ErGraph,
        subject: &PatternTerm,
        patterns: &[TriplePattern],
        vars: &[String],
        filter: Option<&FilterExpr>,
    ) -> Option<Self> {
        let slot = |t: &PatternTerm| -> Option<Slot> {
            match t {
                PatternTerm::Var(v) => Some(Slot::Var(vars.iter().position(|x| x == v)?)),
                PatternTerm::Node(n) => g.lookup(n).map(Slot::Const),
            }
        };
        let mut compiled = Vec::with_capacity(patterns.len());
        for p in patterns {
            let pred = slot(&p.predicate)?;
            let access = match pred {
                Slot::Const(id) => Access::Pred(id, g.partition(id)),
                Slot::Var(_) => Access::All(g.encoded_triples()),
            };
            compiled.push(StarPattern {
                access,
                pred,
                obj: slot(&p.object)?,
            });
        }
        Some(Self {
            subject: slot(subject)?,
            patterns: compiled,
            width: vars.len(),
            filter: filter.map(|f| Compiled::new(f, vars)),
        })
    }

    fn candidate_subjects(&self) -> Vec<TermId> {
        if let Slot::Const(s) = self.subject {
            return vec![s];
        }
        let Some(driver) = self.patterns.iter().min_by_key(|p| p.access.len()) else {
            return Vec::new();
        };
        let mut out: Vec<TermId> = (0..driver.access.len())
            .map(|i| driver.access.subject(i))
            .collect();
        out.dedup();
        out
    }

    fn expand(
        &self,
        g: &ErGraph,
        ranges: &[Access<'_>],
        k: usize,
        binding: &mut [Option<TermId>],
        out: &mut Vec<Vec<TermId>>,
    ) {
        if k == ranges.len() {
            let row: Vec<TermId> = binding.iter().map(|b| b.expect("bound")).collect();
            if self.filter.as_ref().is_none_or(|f| f.holds(g, &row)) {
                out.push(row);
            }
            return;
        }
        let pat = &self.patterns[k];
        let range = ranges[k];
        for i in 0..range.len() {
            let (p, o) = range.edge(i);
            let mut newly = [usize::MAX; 2];
            let mut ok = true;
            for (n, (slot, value)) in [(pat.pred, p), (pat.obj, o)].into_iter().enumerate() {
                match slot {
                    Slot::Const(c) => ok &= c == value,
                    Slot::Var(j) => match binding[j] {
                        Some(b) => ok &= b == value,
                        None => {
                            binding[j] = Some(value);
                            newly[n] = j;
                        }
                    },
                }
                if !ok {
                    break;
                }
            }
            if ok {
                self.expand(g, ranges, k + 1, binding, out);
            }
            for j in newly.into_iter().filter(|&j| j != usize::MAX) {
                binding[j] = None;
            }
        }
    }

    fn rows_for(&self, g: &ErGraph, subjects: &[TermId], ctx: &Ctx<'_>) -> Result<Vec<Vec<TermId>>, PlanError> {
        let mut out = Vec::new();
        let mut binding = vec![None; self.width];
        let mut ranges = Vec::with_capacity(self.patterns.len());
        for (n, &s) in subjects.iter().enumerate() {
            if n % 512 == 0 {
                ctx.check()?;
            }
            ranges.clear();
            ranges.extend(self.patterns.iter().map(|p| p.access.range(s)));
            if ranges.iter().any(|r| r.len() == 0) {
                continue;
            }
            binding.iter_mut().for_each(|b| *b = None);
            if let Slot::Var(j) = self.subject {
                binding[j] = Some(s);
            }
            self.expand(g, &ranges, 0, &mut binding, &mut out);
        }
        Ok(out)
    }
}

fn block_vars(patterns: &[TriplePattern]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in patterns.iter().flat_map(TriplePattern::vars) {
        if !out.iter().any(|x| x == v) {
            out.push(v.to_string());
        }
    }
    out
}

fn star_join(
    ctx: &Ctx<'_>,
    subject: &PatternTerm,
    patterns: &[TriplePattern],
    filter: Option<&FilterExpr>,
) -> Result<Relation, PlanError> {
    let vars = block_vars(patterns);
    let mut rel = Relation::new(vars);
    let Some(star) = Star::new(ctx.g, subject, patterns, &rel.vars, filter) else {
        return Ok(rel);
    };
    let mut parts: Vec<Vec<TermId>> = vec![Vec::new(); ctx.parts];
    for s in star.candidate_subjects() {
        parts[bucket([s], ctx.parts)].push(s);
    }
    let g = ctx.g;
    let star = &star;
    let outputs = ctx.try_map(parts, |subjects| star.rows_for(g, &subjects, ctx))?;
    rel.rows = outputs.into_iter().flatten().collect();
    rel.normalize();
    Ok(rel)
}

// ---- chain join ----

fn chain_join(ctx: &Ctx<'_>, left: Relation, right: Relation) -> Result<Relation, PlanError> {
    let shared: Vec<(usize, usize)> = left
        .vars
        .iter()
        .enumerate()
        .filter_map(|(i, v)| right.column(v).map(|j| (i, j)))
        .collect();
    let extra: Vec<usize> = (0..right.vars.len())
        .filter(|j| !shared.iter().any(|&(_, r)| r == *j))
        .collect();
    let mut vars = left.vars.clone();
    vars.extend(extra.iter().map(|&j| right.vars[j].clone()));

    let combine = |l: &[TermId], r: &[TermId]| -> Vec<TermId> {
        let mut row = Vec::with_capacity(l.len() + extra.len());
        row.extend_from_slice(l);
        row.extend(extra.iter().map(|&j| r[j]));
        row
    };

    let rows: Vec<Vec<TermId>> = if shared.is_empty() {
        let chunk = left.rows.len().div_ceil(ctx.parts).max(1);
        let chunks: Vec<&[Vec<TermId>]> = left.rows.chunks(chunk).collect();
        let right = &right;
        ctx.try_map(chunks, |ls| {
            ctx.check()?;
            Ok(ls
                .iter()
                .flat_map(|l| right.rows.iter().map(|r| combine(l, r)))
                .collect::<Vec<_>>())
        })?
        .into_iter()
        .flatten()
        .collect()
    } else {
        let lkey = |row: &[TermId]| shared.iter().map(|&(i, _)| row[i]).collect::<Vec<_>>();
        let rkey = |row: &[TermId]| shared.iter().map(|&(_, j)| row[j]).collect::<Vec<_>>();
        let mut parts: Vec<Bucket> = vec![Default::default(); ctx.parts];
        for l in &left.rows {
            parts[bucket(lkey(l), ctx.parts)].0.push(l);
        }
        for r in &right.rows {
            parts[bucket(rkey(r), ctx.parts)].1.push(r);
        }
        ctx.try_map(parts, |(ls, rs)| {
            ctx.check()?;
            let mut table: HashMap<Vec<TermId>, Vec<&[TermId]>> = HashMap::new();
            for r in rs {
                table.entry(rkey(r)).or_default().push(r);
            }
            let mut out = Vec::new();
            for l in ls {
                if let Some(matches) = table.get(&lkey(l)) {
                    out.extend(matches.iter().map(|r| combine(l, r)));
                }
            }
            Ok(out)
        })?
        .into_iter()
        .flatten()
        .collect()
    };
    let mut rel = Relation { vars, rows };
    rel.normalize();
    Ok(rel)
}

fn filter_rows(ctx: &Ctx<'_>, input: Relation, expr: &FilterExpr) -> Result<Relation, PlanError> {
    let compiled = Compiled::new(expr, &input.vars);
    let chunk = input.rows.len().div_ceil(ctx.parts).max(1);
    let g = ctx.g;
    let compiled = &compiled;
    let kept = ctx.try_map(input.rows.chunks(chunk).collect(), |rows: &[Vec<TermId>]| {
        ctx.check()?;
        Ok(rows
            .iter()
            .filter(|r| compiled.holds(g, r))
            .cloned()
            .collect::<Vec<_>>())
    })?;
    Ok(Relation {
        vars: input.vars,
        rows: kept.into_iter().flatten().collect(),
    })
}

fn project(input: &Relation, projection: &[String]) -> Relation {
    let cols: Vec<Option<usize>> = projection.iter().map(|v| input.column(v)).collect();
    let mut rel = Relation {
        vars: projection.to_vec(),
        rows: input
            .rows
            .iter()
            .filter_map(|r| cols.iter().map(|c| c.map(|i| r[i])).collect())
            .collect(),
    };
    rel.normalize();
    rel
}

/// Runs a compiled plan against one snapshot.
pub fn execute(
    plan: &LogicalPlan,
    g: &ErGraph,
    options: &PlanOptions,
) -> Result<(BindingTable, ExecStats), PlanError> {
    let started = Instant::now();
    let ctx = Ctx::new(g, options);
    let mut outputs: Vec<Option<Relation>> = vec![None; plan.nodes.len()];
    let mut stats = ExecStats::default();
    let mut result = None;

    for (i, node) in plan.nodes.iter().enumerate() {
        ctx.check()?;
        let stage_start = Instant::now();
        let mut take = |k: usize| outputs[node.inputs[k]].take().unwrap_or_default();
        let (rel, rows) = match &node.op {
            Operator::Load => (None, g.triple_count()),
            Operator::Split { predicates, all } => {
                let read = if *all {
                    g.triple_count()
                } else {
                    predicates
                        .iter()
                        .filter_map(|p| g.lookup(p))
                        .map(|p| g.partition(p).len())
                        .sum()
                };
                (None, read)
            }
            Operator::StarJoin {
                subject,
                patterns,
                filter,
                ..
            } => {
                let rel = star_join(&ctx, subject, patterns, filter.as_ref())?;
                let n = rel.rows.len();
                (Some(rel), n)
            }
            Operator::ChainJoin { .. } => {
                let left = take(0);
                let right = take(1);
                let rel = chain_join(&ctx, left, right)?;
                let n = rel.rows.len();
                (Some(rel), n)
            }
            Operator::Filter { expr } => {
                let rel = filter_rows(&ctx, take(0), expr)?;
                let n = rel.rows.len();
                (Some(rel), n)
            }
            Operator::Store { projection, scan } => {
                let input = match scan {
                    Some(p) => star_join(&ctx, &p.subject, std::slice::from_ref(p), None)?,
                    None => take(0),
                };
                let rel = project(&input, projection);
                let n = rel.rows.len();
                result = Some(rel);
                (None, n)
            }
        };
        outputs[i] = rel;
        stats.stages.push(StageStats {
            operator: node.op.name(),
            rows,
            elapsed: stage_start.elapsed(),
        });
    }
    stats.elapsed = started.elapsed();
    let table = result.unwrap_or_default().decode(g);
    Ok((table, stats))
}

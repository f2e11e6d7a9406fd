//! Logical dataflow plan: LOAD, SPLIT, STARJOIN, CHAINJOIN, FILTER, STORE.

use std::collections::BTreeSet;
use std::fmt;

use crate::graph::{ErGraph, NodeId};
use crate::query::{FilterExpr, PatternTerm, TriplePattern};

use super::algebra::{AlgebraTree, StarBlock};
use super::PlanOptions;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operator {
    Load,
    /// Vertical partitions touched by the query. `all` is set when some
    /// pattern has a variable predicate and therefore reads every partition.
    Split { predicates: Vec<NodeId>, all: bool },
    StarJoin {
        subject: PatternTerm,
        patterns: Vec<TriplePattern>,
        /// Conjuncts pushed into the join (pushdown mode only).
        filter: Option<FilterExpr>,
        estimate: usize,
    },
    ChainJoin { vars: Vec<String> },
    Filter { expr: FilterExpr },
    /// Sink. `scan` is set when the single star join was elided.
    Store {
        projection: Vec<String>,
        scan: Option<TriplePattern>,
    },
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::Load => "LOAD",
            Operator::Split { .. } => "SPLIT",
            Operator::StarJoin { .. } => "STARJOIN",
            Operator::ChainJoin { .. } => "CHAINJOIN",
            Operator::Filter { .. } => "FILTER",
            Operator::Store { .. } => "STORE",
        }
    }
}

/// How an operator's input is partitioned across workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Partitioning {
    Single,
    ByPredicate,
    /// Hash of the listed variables; empty for round-robin row chunks.
    Hash(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanNode {
    pub op: Operator,
    pub inputs: Vec<usize>,
    pub partitioning: Partitioning,
}

/// Operator DAG in topological order; the last node is the STORE sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalPlan {
    pub nodes: Vec<PlanNode>,
}

impl LogicalPlan {
    pub fn count(&self, name: &str) -> usize {
        self.nodes.iter().filter(|n| n.op.name() == name).count()
    }

    pub fn sink(&self) -> usize {
        self.nodes.len() - 1
    }

    fn push(&mut self, op: Operator, inputs: Vec<usize>, partitioning: Partitioning) -> usize {
        self.nodes.push(PlanNode {
            op,
            inputs,
            partitioning,
        });
        self.nodes.len() - 1
    }
}

/// Estimated output size of a star block: the smallest partition among its
/// constant predicates, or the triple count when every predicate is a variable.
pub fn estimate_block(g: &ErGraph, block: &StarBlock) -> usize {
    block
        .patterns
        .iter()
        .filter_map(|p| match &p.predicate {
            PatternTerm::Node(n) => Some(g.lookup(n).map_or(0, |id| g.partition(id).len())),
            PatternTerm::Var(_) => None,
        })
        .min()
        .unwrap_or_else(|| g.triple_count())
}

pub fn compile_plan(tree: &AlgebraTree, g: &ErGraph, options: &PlanOptions) -> LogicalPlan {
    let mut plan = LogicalPlan { nodes: Vec::new() };
    let load = plan.push(Operator::Load, vec![], Partitioning::Single);

    let mut predicates = BTreeSet::new();
    let mut all = false;
    for p in tree.blocks.iter().flat_map(|b| &b.patterns) {
        match &p.predicate {
            PatternTerm::Node(n) => {
                predicates.insert(n.clone());
            }
            PatternTerm::Var(_) => all = true,
        }
    }
    let split = plan.push(
        Operator::Split {
            predicates: predicates.into_iter().collect(),
            all,
        },
        vec![load],
        Partitioning::ByPredicate,
    );

    if tree.blocks.len() == 1 && tree.leaf_count() == 1 && tree.filter.is_none() {
        plan.push(
            Operator::Store {
                projection: tree.projection.clone(),
                scan: Some(tree.blocks[0].patterns[0].clone()),
            },
            vec![split],
            Partitioning::Single,
        );
        return plan;
    }

    // Filter conjuncts: pushed into the first block that binds all their
    // variables when pushdown is on, otherwise kept for the FILTER stage.
    let mut pushed: Vec<Vec<FilterExpr>> = vec![Vec::new(); tree.blocks.len()];
    let mut residual: Vec<FilterExpr> = Vec::new();
    if let Some(filter) = &tree.filter {
        for c in filter.conjuncts() {
            let target = options.pushdown.then(|| {
                let vars = c.vars();
                tree.blocks
                    .iter()
                    .position(|b| {
                        let bound = b.vars();
                        vars.iter().all(|v| bound.contains(v))
                    })
            });
            match target.flatten() {
                Some(i) => pushed[i].push(c.clone()),
                None => residual.push(c.clone()),
            }
        }
    }

    let estimates: Vec<usize> = tree.blocks.iter().map(|b| estimate_block(g, b)).collect();
    let mut stars = Vec::with_capacity(tree.blocks.len());
    for (i, block) in tree.blocks.iter().enumerate() {
        let key = block.subject.var().map(str::to_string).into_iter().collect();
        stars.push(plan.push(
            Operator::StarJoin {
                subject: block.subject.clone(),
                patterns: block.patterns.clone(),
                filter: FilterExpr::conjoin(std::mem::take(&mut pushed[i])),
                estimate: estimates[i],
            },
            vec![split],
            Partitioning::Hash(key),
        ));
    }

    // Left-deep chain joins: start from the smallest block and repeatedly
    // attach the smallest block sharing a variable with what is joined so far.
    let mut remaining: Vec<usize> = (0..tree.blocks.len()).collect();
    remaining.sort_by_key(|&i| (estimates[i], i));
    let mut current = None;
    let mut bound: Vec<&str> = Vec::new();
    while !remaining.is_empty() {
        let pick = remaining
            .iter()
            .position(|&i| {
                current.is_none() || tree.blocks[i].vars().iter().any(|v| bound.contains(v))
            })
            .unwrap_or(0);
        let i = remaining.remove(pick);
        let vars = tree.blocks[i].vars();
        current = Some(match current {
            None => stars[i],
            Some(left) => {
                let shared: Vec<String> = vars
                    .iter()
                    .filter(|v| bound.contains(v))
                    .map(|v| v.to_string())
                    .collect();
                plan.push(
                    Operator::ChainJoin {
                        vars: shared.clone(),
                    },
                    vec![left, stars[i]],
                    Partitioning::Hash(shared),
                )
            }
        });
        for v in vars {
            if !bound.contains(&v) {
                bound.push(v);
            }
        }
    }

    let mut last = current.unwrap_or(split);
    if let Some(expr) = FilterExpr::conjoin(residual) {
        last = plan.push(
            Operator::Filter { expr },
            vec![last],
            Partitioning::Hash(Vec::new()),
        );
    }
    plan.push(
        Operator::Store {
            projection: tree.projection.clone(),
            scan: None,
        },
        vec![last],
        Partitioning::Single,
    );
    plan
}

fn var_list(vars: &[String]) -> String {
    vars.iter()
        .map(|v| format!("?{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for LogicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for node in &self.nodes {
            match &node.op {
                Operator::Load => writeln!(f, "LOAD")?,
                Operator::Split { predicates, all } => {
                    let mut names: Vec<String> =
                        predicates.iter().map(|p| p.as_str().to_string()).collect();
                    if *all {
                        names.push("*".to_string());
                    }
                    writeln!(f, "SPLIT [{}]", names.join(", "))?;
                }
                Operator::StarJoin {
                    subject,
                    patterns,
                    filter,
                    ..
                } => {
                    writeln!(f, "STARJOIN {subject} [{} patterns]", patterns.len())?;
                    for p in patterns {
                        writeln!(f, "  {p}")?;
                    }
                    if let Some(filter) = filter {
                        writeln!(f, "  FILTER ({filter})")?;
                    }
                }
                Operator::ChainJoin { vars } if vars.is_empty() => writeln!(f, "CHAINJOIN x")?,
                Operator::ChainJoin { vars } => writeln!(f, "CHAINJOIN {}", var_list(vars))?,
                Operator::Filter { expr } => writeln!(f, "FILTER ({expr})")?,
                Operator::Store { projection, scan } => {
                    write!(f, "STORE {}", var_list(projection))?;
                    if let Some(p) = scan {
                        write!(f, " <- {p}")?;
                    }
                    writeln!(f)?;
                }
            }
        }
        Ok(())
    }
}

/// Stable text rendering of a plan, one operator per unindented line.
pub fn explain(plan: &LogicalPlan) -> String {
    plan.to_string()
}

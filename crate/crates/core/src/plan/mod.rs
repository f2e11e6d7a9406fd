//! Select evaluation: algebra tree, logical dataflow plan and a
//! partition-parallel executor.

mod algebra;
mod exec;
mod logical;
mod table;

use std::time::Duration;

use thiserror::Error;

use crate::graph::ErGraph;
use crate::query::SelectStmt;

pub use algebra::{build_algebra, AlgebraTree, ChainLink, StarBlock};
pub use exec::{execute, ExecStats, StageStats};
pub use logical::{compile_plan, estimate_block, explain, LogicalPlan, Operator, Partitioning, PlanNode};
pub use table::BindingTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("query patterns fall into disconnected groups ({}); enable products to allow a cartesian join", .groups.join(", "))]
    DisconnectedQuery { groups: Vec<String> },
    #[error("evaluation exceeded the {0:?} time limit")]
    EvaluationTimeout(Duration),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOptions {
    /// Worker count; 1 runs every stage on the calling thread.
    pub parallelism: usize,
    pub allow_product: bool,
    /// Push filter conjuncts into the star joins that bind their variables.
    pub pushdown: bool,
    pub timeout: Option<Duration>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            parallelism: 1,
            allow_product: false,
            pushdown: false,
            timeout: None,
        }
    }
}

impl PlanOptions {
    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }
}

pub fn plan_select(stmt: &SelectStmt, g: &ErGraph, options: &PlanOptions) -> Result<LogicalPlan, PlanError> {
    let tree = build_algebra(stmt, options.allow_product)?;
    Ok(compile_plan(&tree, g, options))
}

/// Builds, compiles and executes a select statement.
pub fn run_select(
    stmt: &SelectStmt,
    g: &ErGraph,
    options: &PlanOptions,
) -> Result<(BindingTable, ExecStats), PlanError> {
    let plan = plan_select(stmt, g, options)?;
    execute(&plan, g, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, MESSAGE_QUERY, VENDOR_OFFER_REVIEW_QUERY};
    use crate::graph::{NodeId, Triple};
    use crate::query::{parse, translate_entity, StatementKind};

    fn select(text: &str) -> SelectStmt {
        match parse(text).unwrap().kind {
            StatementKind::Select(s) => s,
            StatementKind::Entity(e) => translate_entity(&e),
            other => panic!("unexpected statement {other:?}"),
        }
    }

    fn vor_graph() -> ErGraph {
        ErGraph::build(fixtures::vendor_offer_review_triples(6, 3, 2)).unwrap()
    }

    #[test]
    fn vendor_offer_review_plan_shape() {
        let g = vor_graph();
        let plan = plan_select(&select(VENDOR_OFFER_REVIEW_QUERY), &g, &PlanOptions::default()).unwrap();
        assert_eq!(plan.count("LOAD"), 1);
        assert_eq!(plan.count("SPLIT"), 1);
        assert_eq!(plan.count("STARJOIN"), 3);
        assert_eq!(plan.count("CHAINJOIN"), 2);
        assert_eq!(plan.count("FILTER"), 1);
        assert_eq!(plan.count("STORE"), 1);
        let text = explain(&plan);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines.contains(&"STARJOIN ?vendor [3 patterns]"), "{text}");
        assert!(lines.contains(&"CHAINJOIN ?offer"), "{text}");
        assert!(lines.contains(&"CHAINJOIN ?vendor"), "{text}");
    }

    #[test]
    fn degenerate_plan_is_three_lines() {
        let g = fixtures::banking();
        let plan = plan_select(&select("select ?s ?o where { ?s submitted ?o }"), &g, &PlanOptions::default()).unwrap();
        let text = explain(&plan);
        assert_eq!(text.lines().count(), 3, "{text}");
        let (rows, _) = execute(&plan, &g, &PlanOptions::default()).unwrap();
        assert_eq!(rows.len(), 2);
        let adam = NodeId::uri("Adam");
        assert_eq!(rows.column("s").unwrap(), vec![&adam; 2]);
    }

    #[test]
    fn message_plan_ends_with_filter() {
        let g = ErGraph::empty();
        let plan = plan_select(&select(MESSAGE_QUERY), &g, &PlanOptions::default()).unwrap();
        assert_eq!(plan.count("STARJOIN"), 1);
        let text = explain(&plan);
        let ops: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with(' '))
            .map(|l| l.split(' ').next().unwrap())
            .collect();
        assert_eq!(ops, ["LOAD", "SPLIT", "STARJOIN", "FILTER", "STORE"]);
    }

    #[test]
    fn entity_query_on_banking() {
        let g = fixtures::banking();
        let stmt = select("entity artifact \\category='home-loan' AND \\submission-branch='Sydney'");
        let (rows, _) = run_select(&stmt, &g, &PlanOptions::default()).unwrap();
        assert_eq!(rows.rows, vec![vec![NodeId::uri("Home-Loan-Document")]]);
    }

    #[test]
    fn empty_graph_gives_no_rows() {
        let g = ErGraph::empty();
        for q in [VENDOR_OFFER_REVIEW_QUERY, MESSAGE_QUERY, "select ?s where { ?s ?p ?o }"] {
            let (rows, _) = run_select(&select(q), &g, &PlanOptions::default()).unwrap();
            assert!(rows.is_empty());
        }
    }

    #[test]
    fn message_query_counts_matches() {
        let mut triples = Vec::new();
        for i in 0..20 {
            let m = format!("m{i}");
            triples.push(Triple::attr(&m, "type", "message"));
            triples.push(Triple::attr(&m, "requestsize", &(i % 3).to_string()));
            triples.push(Triple::attr(&m, "responsesize", &(i % 2).to_string()));
            let month = if i < 15 { "2017-12" } else { "2018-01" };
            triples.push(Triple::attr(&m, "timestamp", &format!("{month}-{:02}T10:00:00.000Z", i + 1)));
        }
        let g = ErGraph::build(triples).unwrap();
        let expected = (0..20).filter(|i| i % 3 == i % 2 && *i < 15).count();
        let (rows, _) = run_select(&select(MESSAGE_QUERY), &g, &PlanOptions::default()).unwrap();
        assert_eq!(rows.len(), expected);
    }

    #[test]
    fn parallel_and_pushdown_agree() {
        let g = vor_graph();
        let stmt = select(VENDOR_OFFER_REVIEW_QUERY);
        let (base, _) = run_select(&stmt, &g, &PlanOptions::default()).unwrap();
        assert!(!base.is_empty());
        for parallelism in [2, 8] {
            for pushdown in [false, true] {
                let opts = PlanOptions {
                    pushdown,
                    ..PlanOptions::default().with_parallelism(parallelism)
                };
                let (rows, _) = run_select(&stmt, &g, &opts).unwrap();
                assert_eq!(rows, base);
            }
        }
    }

    #[test]
    fn pushdown_removes_filter_stage() {
        let g = vor_graph();
        let opts = PlanOptions {
            pushdown: true,
            ..PlanOptions::default()
        };
        let plan = plan_select(&select(VENDOR_OFFER_REVIEW_QUERY), &g, &opts).unwrap();
        assert_eq!(plan.count("FILTER"), 0);
        assert!(explain(&plan).contains("  FILTER (?days <= "), "{}", explain(&plan));
    }

    #[test]
    fn product_when_allowed() {
        let g = fixtures::banking();
        let stmt = select("select ?a ?b where { ?a submitted ?x. ?b approved-by ?y }");
        assert!(run_select(&stmt, &g, &PlanOptions::default()).is_err());
        let opts = PlanOptions {
            allow_product: true,
            ..PlanOptions::default()
        };
        let (rows, _) = run_select(&stmt, &g, &opts).unwrap();
        assert_eq!(rows.len(), 1);
        let plan = plan_select(&stmt, &g, &opts).unwrap();
        assert!(explain(&plan).contains("CHAINJOIN x"));
    }

    #[test]
    fn timeout_is_reported() {
        let g = vor_graph();
        let opts = PlanOptions {
            timeout: Some(Duration::ZERO),
            ..PlanOptions::default()
        };
        assert!(matches!(
            run_select(&select(VENDOR_OFFER_REVIEW_QUERY), &g, &opts),
            Err(PlanError::EvaluationTimeout(_))
        ));
    }
}

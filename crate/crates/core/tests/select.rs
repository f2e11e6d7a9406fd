mod common;

use procgraph_core::graph::{ErGraph, NodeId};
use procgraph_core::plan::{self, PlanOptions};
use procgraph_core::query::{parse, translate_entity, SelectStmt, StatementKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn select_of(text: &str) -> SelectStmt {
    match parse(text).unwrap_or_else(|e| panic!("{text}: {e}")).kind {
        StatementKind::Select(s) => s,
        StatementKind::Entity(e) => translate_entity(&e),
        other => panic!("not a select: {other:?}"),
    }
}

fn engine_rows(g: &ErGraph, stmt: &SelectStmt, opts: &PlanOptions) -> Vec<Vec<NodeId>> {
    let (table, _) = plan::run_select(stmt, g, opts).unwrap();
    assert_eq!(table.columns, stmt.projection);
    let mut rows = table.rows;
    rows.sort();
    rows.dedup();
    rows
}

#[test]
fn corpus_is_not_vacuous() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let graphs: Vec<_> = (0..40).map(|_| common::gen_market(&mut rng)).collect();
    for q in common::MARKET_QUERIES {
        let stmt = select_of(q);
        let hits = graphs
            .iter()
            .filter(|t| !common::naive_select(t, &stmt).is_empty())
            .count();
        assert!(hits > 0, "no generated graph answers {q}");
    }
}

#[test]
fn pushdown_and_partitions_do_not_change_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let triples = common::gen_market(&mut rng);
        let g = ErGraph::build(triples).unwrap();
        for q in common::MARKET_QUERIES {
            let stmt = select_of(q);
            let base = engine_rows(&g, &stmt, &PlanOptions::default());
            let mut opts = PlanOptions::default().with_parallelism(3);
            opts.pushdown = true;
            assert_eq!(engine_rows(&g, &stmt, &opts), base, "{q}");
        }
    }
}

#[test]
fn parallel_output_is_byte_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = ErGraph::build(common::gen_market(&mut rng)).unwrap();
    for q in common::MARKET_QUERIES {
        let stmt = select_of(q);
        let (a, _) = plan::run_select(&stmt, &g, &PlanOptions::default()).unwrap();
        let (b, _) = plan::run_select(&stmt, &g, &PlanOptions::default().with_parallelism(8)).unwrap();
        assert_eq!(a.to_tsv(), b.to_tsv(), "{q}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plan_matches_naive_matcher(seed in any::<u64>(), q in 0..common::MARKET_QUERIES.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let triples = common::gen_market(&mut rng);
        let g = ErGraph::build(triples.clone()).unwrap();
        let stmt = select_of(common::MARKET_QUERIES[q]);
        let expected = common::naive_select(&triples, &stmt);
        prop_assert_eq!(&engine_rows(&g, &stmt, &PlanOptions::default()), &expected);
        prop_assert_eq!(&engine_rows(&g, &stmt, &PlanOptions::default().with_parallelism(4)), &expected);
    }

    #[test]
    fn plan_shape_invariants(seed in any::<u64>(), q in 0..common::MARKET_QUERIES.len()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ErGraph::build(common::gen_market(&mut rng)).unwrap();
        let stmt = select_of(common::MARKET_QUERIES[q]);
        let lp = plan::plan_select(&stmt, &g, &PlanOptions::default()).unwrap();
        let tree = plan::build_algebra(&stmt, false).unwrap();
        prop_assert_eq!(lp.count("STORE"), 1);
        prop_assert_eq!(lp.count("LOAD"), 1);
        if lp.count("STARJOIN") > 0 {
            prop_assert_eq!(lp.count("STARJOIN"), tree.blocks.len());
            prop_assert_eq!(lp.count("CHAINJOIN"), tree.blocks.len() - 1);
        }
        for b in &tree.blocks {
            prop_assert!(b.patterns.iter().all(|p| p.subject == b.subject));
        }
    }
}

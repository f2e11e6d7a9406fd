mod common;

use std::collections::BTreeSet;

use procgraph_core::graph::{ErGraph, NodeId};
use procgraph_core::path::{find_paths, FindOptions, PathNode, PathNodeSpec, PathRegex, ReachabilityIndex};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64) -> (common::RandomDag, ErGraph, common::Rx, PathRegex) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dag = common::gen_dag(&mut rng, common::NODE_COUNT, 150, 3_000);
    let g = ErGraph::build(dag.triples.clone()).unwrap();
    let rx = common::gen_regex(&mut rng, 3, common::NODE_COUNT);
    let re = PathRegex::compile(&rx.render()).unwrap_or_else(|e| panic!("{}: {e}", rx.render()));
    (dag, g, rx, re)
}

#[test]
fn generated_regexes_respect_depth_and_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let rx = common::gen_regex(&mut rng, 3, 10);
        assert!(rx.depth() <= 3);
        let re = PathRegex::compile(&rx.render()).unwrap();
        assert!(re.expr().depth() <= 3);
        let again = PathRegex::compile(&re.to_string()).unwrap();
        assert_eq!(re, again, "{}", rx.render());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn find_paths_equals_exhaustive_dfs(seed in any::<u64>()) {
        let (dag, g, rx, re) = setup(seed);
        let expected = common::oracle_paths(&dag, &rx);
        let got = find_paths(&g, &re, &FindOptions::default()).unwrap();
        prop_assert_eq!(&got, &expected, "regex {}", rx.render());
        let par = find_paths(&g, &re, &FindOptions { parallel: true, ..FindOptions::default() }).unwrap();
        prop_assert_eq!(&par, &expected);
    }

    #[test]
    fn paths_chain_and_respect_limits(seed in any::<u64>(), limit in 0usize..20, hops in 0usize..4) {
        let (_, g, _, re) = setup(seed);
        let all = find_paths(&g, &re, &FindOptions::default()).unwrap();
        for p in &all {
            let t = p.triples();
            prop_assert!(t.windows(2).all(|w| w[0].object == w[1].subject));
            prop_assert_eq!(p.hops(), p.predicates().len());
        }
        let limited = find_paths(&g, &re, &FindOptions::with_limit(limit)).unwrap();
        prop_assert_eq!(&limited[..], &all[..limit.min(all.len())]);
        let bounded = find_paths(&g, &re, &FindOptions { max_hops: Some(hops), ..FindOptions::default() }).unwrap();
        let expected: Vec<_> = all.iter().filter(|p| p.hops() <= hops).cloned().collect();
        prop_assert_eq!(bounded, expected);
    }

    #[test]
    fn reachability_agrees_with_enumeration(seed in any::<u64>()) {
        let (_, g, _, re) = setup(seed);
        let all = find_paths(&g, &re, &FindOptions::default()).unwrap();
        let pairs: BTreeSet<(NodeId, NodeId)> =
            all.iter().map(|p| (p.start().clone(), p.end().clone())).collect();
        let mut idx = ReachabilityIndex::new(&g, &re, None).unwrap();
        let mut got = BTreeSet::new();
        for s in idx.start_candidates() {
            let ends: Vec<_> = idx.ends_from(s).iter().copied().collect();
            for e in ends {
                got.insert((g.term(s).clone(), g.term(e).clone()));
            }
        }
        prop_assert_eq!(got, pairs);
    }

    #[test]
    fn timed_path_nodes_only_grow_on_extension(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dag = common::gen_dag(&mut rng, 20, 40, 500);
        let split = dag.triples.len() / 2;
        let before = ErGraph::build(dag.triples[..split].to_vec()).unwrap();
        let after = ErGraph::build(dag.triples.clone()).unwrap();
        let rx = common::gen_regex(&mut rng, 2, 20);
        let re = PathRegex::compile(&rx.render()).unwrap();
        let spec = PathNodeSpec::new("watch", re).timed();
        let mut node = PathNode::evaluate(&spec, &before, 1).unwrap();
        let old: BTreeSet<_> = node.paths().into_iter().cloned().collect();
        node.refresh(&after, 2).unwrap();
        let new: BTreeSet<_> = node.paths().into_iter().cloned().collect();
        prop_assert!(old.is_subset(&new));
        prop_assert!(node.entries.iter().all(|e| e.removed_at.is_none()));
    }
}

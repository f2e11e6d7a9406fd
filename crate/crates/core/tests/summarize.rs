mod common;

use std::collections::{BTreeMap, BTreeSet};

use procgraph_core::graph::{ErGraph, NodeId};
use procgraph_core::registry::AlgorithmRegistry;
use procgraph_core::summarize::{
    build_process_instances, discover_model, group_summarize, partition_by_correlation, CorrelationCondition,
    Measure,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn attribute_partition_laws(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = common::gen_log(&mut rng, 800, 50);
        let g = ErGraph::build(common::log_triples(&events)).unwrap();
        let registry = AlgorithmRegistry::with_builtins();
        let folders = partition_by_correlation(
            &g, &CorrelationCondition::attr_eq("order", "order"), None, &registry, 1,
        ).unwrap();
        let expected = common::group_by_key(&events);
        prop_assert_eq!(folders.len(), expected.len());
        let mut seen = BTreeSet::new();
        for f in &folders {
            let key = f.name.strip_prefix("order=").unwrap();
            let members: BTreeSet<String> = f.members.iter().map(|m| m.as_str().to_string()).collect();
            prop_assert_eq!(&members, &expected[key]);
            for m in &f.members {
                prop_assert!(seen.insert(m.clone()), "{} in two folders", m);
            }
        }

        let instances = build_process_instances(&g, &folders).unwrap();
        let model = discover_model(&instances, "dfg", &registry).unwrap();
        prop_assert_eq!(model.instances, folders.len());
        let dfg: BTreeMap<(String, String), usize> =
            model.edges.iter().map(|e| ((e.from.clone(), e.to.clone()), e.count)).collect();
        prop_assert_eq!(dfg, common::dfg_oracle(&events));
        let mut occ = BTreeMap::new();
        for e in events.iter().filter(|e| e.key.is_some()) {
            *occ.entry(e.activity.clone()).or_insert(0) += 1;
        }
        prop_assert_eq!(common::check_flow(&model, &occ), Ok(()));
    }

    #[test]
    fn group_summary_matches_counts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = common::gen_log(&mut rng, 300, 8);
        let g = ErGraph::build(common::log_triples(&events)).unwrap();
        let table = group_summarize(&g, None, &["activity".to_string()], &[Measure::count()]).unwrap();
        let mut expected: BTreeMap<String, usize> = BTreeMap::new();
        for e in &events {
            *expected.entry(e.activity.clone()).or_insert(0) += 1;
        }
        let got: BTreeMap<String, usize> = table
            .rows
            .iter()
            .map(|r| (r[0].as_str().to_string(), r[1].as_str().parse().unwrap()))
            .collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn scoped_partition_only_holds_scoped_entities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let events = common::gen_log(&mut rng, 100, 5);
        let mut triples = common::log_triples(&events);
        // non-event entities sharing the key attribute
        for i in 0..5 {
            triples.push(procgraph_core::graph::Triple::attr(&format!("case{i}"), "type", "case"));
            triples.push(procgraph_core::graph::Triple::attr(&format!("case{i}"), "order", &format!("k{i}")));
        }
        let g = ErGraph::build(triples).unwrap();
        let registry = AlgorithmRegistry::with_builtins();
        let cond = CorrelationCondition::attr_eq("order", "order").within("event");
        let folders = partition_by_correlation(&g, &cond, Some("ev"), &registry, 1).unwrap();
        for f in &folders {
            prop_assert!(f.name.starts_with("ev/order="));
            prop_assert!(f.members.iter().all(|m: &NodeId| m.as_str().starts_with("ev")));
        }
        let total: usize = folders.iter().map(|f| f.len()).sum();
        prop_assert_eq!(total, events.iter().filter(|e| e.key.is_some()).count());
    }
}

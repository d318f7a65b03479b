//! Merge behavior over randomized three-source fixtures, with edge mapping
//! checked by an independent duplicate-aware count.

mod common;

use std::collections::BTreeSet;

use common::random_source_parts;
use dtgraph_core::fixtures;
use dtgraph_core::graph::graph_to_json;
use dtgraph_core::merge::{merge_graphs, MergePolicy};
use proptest::prelude::*;

fn norm(s: &str) -> String {
    s.trim().to_lowercase()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn merged_nodes_and_edges_match_ground_truth(seed in 0u64..100_000) {
        let (parts, n, expected_edges) = random_source_parts(seed);
        let (merged, report) =
            merge_graphs(&parts, &fixtures::taxonomy(), &MergePolicy::default()).unwrap();
        prop_assert_eq!(merged.node_count(), n);
        // duplicate-aware edge oracle: one output edge per distinct
        // (normalized endpoint pair, relation)
        let got: BTreeSet<(String, String, String)> = merged
            .edges()
            .iter()
            .map(|e| {
                let a = norm(&merged.node(&e.src).unwrap().name);
                let b = norm(&merged.node(&e.dst).unwrap().name);
                (a.clone().min(b.clone()), a.max(b), e.relation.clone())
            })
            .collect();
        prop_assert_eq!(got.len(), merged.edge_count(), "collapsed output contains no duplicates");
        prop_assert_eq!(got, expected_edges);
        prop_assert!(report.nodes_after <= report.nodes_before);
        prop_assert!(report.edges_after <= report.edges_before);
    }

    #[test]
    fn merge_is_idempotent(seed in 0u64..100_000) {
        let (parts, _, _) = random_source_parts(seed);
        let tax = fixtures::taxonomy();
        let policy = MergePolicy::default();
        let (once, _) = merge_graphs(&parts, &tax, &policy).unwrap();
        let (twice, report) = merge_graphs(&[once.clone(), once.clone()], &tax, &policy).unwrap();
        prop_assert_eq!(
            twice.canonical_signature().unwrap(),
            once.canonical_signature().unwrap()
        );
        prop_assert_eq!(report.nodes_after, once.node_count());
    }

    #[test]
    fn merge_is_order_insensitive(seed in 0u64..100_000) {
        let (parts, _, _) = random_source_parts(seed);
        let tax = fixtures::taxonomy();
        let policy = MergePolicy::default();
        let (reference, _) = merge_graphs(&parts, &tax, &policy).unwrap();
        let reference_json = graph_to_json(&reference);
        let orders: [[usize; 3]; 5] =
            [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for order in orders {
            let permuted: Vec<_> = order.iter().map(|&i| parts[i].clone()).collect();
            let (merged, _) = merge_graphs(&permuted, &tax, &policy).unwrap();
            prop_assert_eq!(graph_to_json(&merged), reference_json.clone());
        }
    }

    #[test]
    fn provenance_is_the_union_of_sources(seed in 0u64..100_000) {
        let (parts, _, _) = random_source_parts(seed);
        let (merged, _) =
            merge_graphs(&parts, &fixtures::taxonomy(), &MergePolicy::default()).unwrap();
        for node in merged.nodes() {
            let mut expected = dtgraph_core::graph::Provenance::new();
            for part in &parts {
                for candidate in part.nodes() {
                    if norm(&candidate.name) == norm(&node.name) {
                        expected.extend(candidate.provenance.iter().copied());
                    }
                }
            }
            prop_assert_eq!(&node.provenance, &expected, "node {}", node.name);
            prop_assert!(!node.provenance.is_empty());
        }
    }
}

#[test]
fn empty_input_merges_to_empty_graph() {
    let (merged, report) =
        merge_graphs(&[], &fixtures::taxonomy(), &MergePolicy::default()).unwrap();
    assert_eq!(merged.node_count(), 0);
    assert_eq!(report.component_count, 0);
}

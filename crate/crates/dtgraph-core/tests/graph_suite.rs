//! Graph-store behavior, checked against independent oracles: permutation
//! isomorphism for canonical signatures, union-find for components.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{enumerate_labeled_graphs, isomorphic_by_permutation, OracleUnionFind};
use dtgraph_core::fixtures::SplitMix64;
use dtgraph_core::graph::{Properties, PropertyGraph, Provenance, SourceTag, Tier, TierSet};
use proptest::prelude::*;

#[test]
fn signature_agrees_with_permutation_oracle_up_to_four_nodes() {
    // all labeled graphs on 1..=4 nodes, two node labels, two edge labels
    for n in 1..=4 {
        let graphs = enumerate_labeled_graphs(n, &["A", "B"], &["r", "s"]);
        let mut buckets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (idx, g) in graphs.iter().enumerate() {
            buckets.entry(g.canonical_signature().unwrap()).or_default().push(idx);
        }
        // equal signature must mean isomorphic; checking each member against
        // its bucket representative is enough
        for members in buckets.values() {
            let rep = &graphs[members[0]];
            for &other in &members[1..] {
                assert!(
                    isomorphic_by_permutation(rep, &graphs[other]),
                    "same signature, not isomorphic (n={n})"
                );
            }
        }
        // distinct signatures must mean non-isomorphic; isomorphic graphs on
        // the same vertex set are relabelings, so comparing bucket
        // representatives pairwise covers the converse
        let reps: Vec<usize> = buckets.values().map(|m| m[0]).collect();
        for (i, &a) in reps.iter().enumerate() {
            for &b in &reps[i + 1..] {
                assert!(
                    !isomorphic_by_permutation(&graphs[a], &graphs[b]),
                    "different signatures, isomorphic (n={n})"
                );
            }
        }
    }
}

fn random_graph(seed: u64) -> PropertyGraph {
    let mut rng = SplitMix64::new(seed);
    dtgraph_core::fixtures::random_labeled_graph(&mut rng, 12, 18, &["A", "B", "C"], &["r", "s"])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn components_match_union_find_oracle(seed in 0u64..5000) {
        let g = random_graph(seed);
        let index: BTreeMap<_, _> = g.nodes().iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let mut uf = OracleUnionFind::new(g.node_count());
        for e in g.edges() {
            uf.union(index[&e.src], index[&e.dst]);
        }
        let mut oracle_blocks: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for i in 0..g.node_count() {
            oracle_blocks.entry(uf.find(i)).or_default().insert(i);
        }
        let got = g.connected_components();
        prop_assert_eq!(got.len(), oracle_blocks.len());
        // blocks are disjoint and cover every node
        let mut seen = BTreeSet::new();
        for block in &got {
            for id in block {
                prop_assert!(seen.insert(id.clone()), "node in two components");
            }
        }
        prop_assert_eq!(seen.len(), g.node_count());
        // each block is one oracle class
        for block in &got {
            let roots: BTreeSet<usize> = block.iter().map(|id| uf.find(index[id])).collect();
            prop_assert_eq!(roots.len(), 1);
        }
    }

    #[test]
    fn signature_invariant_under_renaming_and_order(seed in 0u64..5000) {
        let g = random_graph(seed);
        let original = g.canonical_signature().unwrap();

        // rebuild with renamed nodes, reversed node order and shuffled edges
        let mut rng = SplitMix64::new(seed ^ 0xdead);
        let mut rebuilt = PropertyGraph::new();
        let mut new_ids: Vec<Option<dtgraph_core::graph::NodeId>> = vec![None; g.node_count()];
        let order: Vec<usize> = (0..g.node_count()).rev().collect();
        for &i in &order {
            let node = &g.nodes()[i];
            let id = rebuilt
                .add_node(
                    format!("renamed_{}", rng.next_u64()),
                    &node.type_term,
                    node.tier,
                    Properties::new(),
                    Provenance::from([SourceTag::Io]),
                )
                .unwrap();
            new_ids[i] = Some(id);
        }
        let index: BTreeMap<_, _> = g.nodes().iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let mut edges: Vec<_> = g.edges().to_vec();
        edges.reverse();
        for e in edges {
            let s = new_ids[index[&e.src]].clone().unwrap();
            let d = new_ids[index[&e.dst]].clone().unwrap();
            rebuilt
                .add_edge(&d, &s, &e.relation, e.tier, Properties::new(), Provenance::from([SourceTag::Io]))
                .unwrap();
        }
        prop_assert_eq!(rebuilt.canonical_signature().unwrap(), original);
    }

    #[test]
    fn projection_is_idempotent_and_integrity_holds(seed in 0u64..5000, levels in 1u8..=4) {
        let g = random_graph(seed);
        let tiers = TierSet::of((1..=levels).map(|l| Tier::from_level(l).unwrap()));
        let once = g.project_tiers(&tiers);
        let twice = once.project_tiers(&tiers);
        prop_assert_eq!(once.node_count(), twice.node_count());
        prop_assert_eq!(once.edge_count(), twice.edge_count());
        for e in once.edges() {
            prop_assert!(once.contains_node(&e.src) && once.contains_node(&e.dst));
        }
    }

    #[test]
    fn random_op_sequences_preserve_integrity(seed in 0u64..5000) {
        let mut rng = SplitMix64::new(seed);
        let mut g = PropertyGraph::new();
        let mut ids = Vec::new();
        for step in 0..40 {
            if ids.is_empty() || rng.below(3) == 0 {
                let id = g
                    .add_node(
                        format!("n{step}"),
                        ["A", "B"][rng.below(2) as usize],
                        Tier::from_level(1 + rng.below(4) as u8).unwrap(),
                        Properties::new(),
                        Provenance::from([SourceTag::Plc]),
                    )
                    .unwrap();
                ids.push(id);
            } else {
                let a = ids[rng.below(ids.len() as u64) as usize].clone();
                let b = ids[rng.below(ids.len() as u64) as usize].clone();
                // duplicates rejected, self-loops fine: both leave the graph valid
                let _ = g.add_edge(&a, &b, "r", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc]));
            }
            for e in g.edges() {
                prop_assert!(g.contains_node(&e.src) && g.contains_node(&e.dst));
            }
            prop_assert_eq!(g.nodes().len(), g.node_count());
            prop_assert_eq!(g.edges().len(), g.edge_count());
        }
    }
}

#[test]
fn json_round_trip_is_stable_on_random_graphs() {
    for seed in 0..20 {
        let g = random_graph(seed);
        let text = dtgraph_core::graph::graph_to_json(&g);
        let back = dtgraph_core::graph::graph_from_json(&text).unwrap();
        assert_eq!(dtgraph_core::graph::graph_to_json(&back), text);
        assert_eq!(
            back.canonical_signature().unwrap(),
            g.canonical_signature().unwrap()
        );
    }
}

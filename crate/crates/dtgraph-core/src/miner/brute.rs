//! Exhaustive reference miner for small graphs.
//!
//! Ground truth for the DFS-code search, computed by a completely different
//! route: every connected edge subset is enumerated, subsets are bucketed by
//! the graph-level canonical signature, and embeddings are recovered per
//! bucket by trying all vertex permutations of each member subset onto the
//! bucket representative. Only the `code` field of a returned pattern reuses
//! the canonical-code machinery, as a display form; bucketing and supports
//! never touch it.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::PropertyGraph;

use super::dfs_code::{min_dfs_code, PatternGraph};
use super::matcher::{mni_support, DataView, Embedding, MatchMode};
use super::{MineError, MiningParams, Pattern};

pub const ORACLE_MAX_NODES: usize = 25;
pub const ORACLE_MAX_EDGES: usize = 4;

/// Local structure of one edge subset: participating data nodes in sorted
/// order plus edges re-indexed against that order.
struct SubsetShape {
    data_nodes: Vec<usize>,
    labels: Vec<String>,
    edges: Vec<(usize, usize, String)>,
    edge_set: BTreeSet<(usize, usize, String)>,
}

fn shape_of(view: &DataView, subset: &[usize]) -> SubsetShape {
    let mut data_nodes: Vec<usize> = subset
        .iter()
        .flat_map(|&e| {
            let (a, b) = view.edge_endpoints(e);
            [a, b]
        })
        .collect();
    data_nodes.sort_unstable();
    data_nodes.dedup();
    let local: BTreeMap<usize, usize> =
        data_nodes.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let labels = data_nodes.iter().map(|&d| view.label(d).to_string()).collect();
    let mut edges = Vec::with_capacity(subset.len());
    let mut edge_set = BTreeSet::new();
    for &e in subset {
        let (a, b) = view.edge_endpoints(e);
        let (la, lb) = (local[&a], local[&b]);
        let rel = view.edge_relation(e).to_string();
        edges.push((la, lb, rel.clone()));
        edge_set.insert((la.min(lb), la.max(lb), rel));
    }
    SubsetShape { data_nodes, labels, edges, edge_set }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    heap_permute(&mut current, n, &mut out);
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Enumerates every connected pattern of at most `max_edges` edges with
/// minimum-node-image support at least `min_support`, the slow but simple
/// way. Exact label mode only; bounded to 25 visible nodes and 4 edges.
pub fn brute_force_frequent(
    abox: &PropertyGraph,
    params: &MiningParams,
) -> Result<Vec<Pattern>, MineError> {
    params.validate()?;
    if params.mode == MatchMode::Generalized {
        return Err(MineError::OracleBounds("reference miner handles exact label mode only".into()));
    }
    if params.max_edges > ORACLE_MAX_EDGES {
        return Err(MineError::OracleBounds(format!(
            "max_edges {} exceeds reference bound {ORACLE_MAX_EDGES}",
            params.max_edges
        )));
    }
    if abox.is_directed() {
        return Err(MineError::DirectedUnsupported);
    }
    let view = DataView::filtered(abox, &params.tier_set, None);
    if view.node_count() > ORACLE_MAX_NODES {
        return Err(MineError::OracleBounds(format!(
            "{} nodes exceed reference bound {ORACLE_MAX_NODES}",
            view.node_count()
        )));
    }

    // all connected edge subsets, grown one incident edge at a time
    let mut subsets: BTreeSet<Vec<usize>> = (0..view.edge_count()).map(|e| vec![e]).collect();
    let mut frontier: Vec<Vec<usize>> = subsets.iter().cloned().collect();
    for _ in 1..params.max_edges {
        let mut next = Vec::new();
        for subset in &frontier {
            let nodes: BTreeSet<usize> = subset
                .iter()
                .flat_map(|&e| {
                    let (a, b) = view.edge_endpoints(e);
                    [a, b]
                })
                .collect();
            let mut grown: BTreeSet<Vec<usize>> = BTreeSet::new();
            for &node in &nodes {
                for &(_, e) in view.adjacency(node) {
                    if subset.binary_search(&e).is_err() {
                        let mut bigger = subset.clone();
                        bigger.push(e);
                        bigger.sort_unstable();
                        grown.insert(bigger);
                    }
                }
            }
            for g in grown {
                if subsets.insert(g.clone()) {
                    next.push(g);
                }
            }
        }
        frontier = next;
    }

    // bucket by canonical signature; first subset in order is the representative
    struct Bucket {
        rep: SubsetShape,
        embeddings: Vec<Embedding>,
    }
    let mut buckets: BTreeMap<String, Bucket> = BTreeMap::new();
    for subset in &subsets {
        let shape = shape_of(&view, subset);
        let pattern = PatternGraph::new(shape.labels.clone(), shape.edges.clone())
            .expect("edge subsets are connected by construction");
        let signature = pattern
            .to_property_graph()
            .canonical_signature()
            .expect("pattern graphs are far below the signature bound");
        let bucket = buckets
            .entry(signature)
            .or_insert_with(|| Bucket { rep: shape_of(&view, subset), embeddings: Vec::new() });

        // all isomorphisms representative -> this subset, by brute permutation
        let k = bucket.rep.data_nodes.len();
        if k != shape.data_nodes.len() {
            continue; // same signature requires same node count; defensive skip
        }
        for perm in permutations(k) {
            let labels_ok = (0..k).all(|i| bucket.rep.labels[i] == shape.labels[perm[i]]);
            if !labels_ok {
                continue;
            }
            let edges_ok = bucket.rep.edges.iter().all(|&(a, b, ref rel)| {
                let (pa, pb) = (perm[a], perm[b]);
                shape.edge_set.contains(&(pa.min(pb), pa.max(pb), rel.clone()))
            });
            if edges_ok {
                let assignment = (0..k)
                    .map(|i| view.node_id(shape.data_nodes[perm[i]]).clone())
                    .collect();
                bucket.embeddings.push(Embedding { assignment });
            }
        }
    }

    let mut out = Vec::new();
    for bucket in buckets.into_values() {
        let mut embeddings = bucket.embeddings;
        embeddings.sort();
        embeddings.dedup();
        let support = mni_support(&embeddings, bucket.rep.data_nodes.len());
        if support < params.min_support {
            continue;
        }
        let graph = PatternGraph::new(bucket.rep.labels.clone(), bucket.rep.edges.clone())
            .expect("representative is a valid pattern");
        let code = min_dfs_code(&graph)?;
        out.push(Pattern { code, graph, support, embeddings });
    }
    out.sort_by(|a, b| {
        a.graph
            .edge_count()
            .cmp(&b.graph.edge_count())
            .then_with(|| a.code.cmp_code(&b.code))
    });
    Ok(out)
}

/// Cheap isomorphism-class key for pattern comparison in tests and oracles.
pub fn pattern_signature(p: &PatternGraph) -> String {
    p.to_property_graph()
        .canonical_signature()
        .expect("patterns are far below the signature bound")
}

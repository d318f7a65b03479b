//! Shared test oracles, deliberately independent of the library's own
//! canonical-form and search machinery: isomorphism by trying every vertex
//! permutation, connectivity by a plain union-find.
#![allow(dead_code)] // each test binary uses its own subset

use std::collections::{BTreeMap, BTreeSet};

use dtgraph_core::graph::{Properties, PropertyGraph, Provenance, SourceTag, Tier};

/// Label skeleton of a graph: node labels plus (a, b, relation) edges.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, String)>,
}

pub fn skeleton(g: &PropertyGraph) -> Skeleton {
    let index: std::collections::HashMap<_, _> =
        g.nodes().iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
    Skeleton {
        labels: g.nodes().iter().map(|n| n.type_term.clone()).collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| (index[&e.src], index[&e.dst], e.relation.clone()))
            .collect(),
    }
}

fn edge_multiset(s: &Skeleton, perm: Option<&[usize]>) -> Vec<(usize, usize, String)> {
    let map = |v: usize| perm.map_or(v, |p| p[v]);
    let mut edges: Vec<(usize, usize, String)> = s
        .edges
        .iter()
        .map(|&(a, b, ref rel)| {
            let (pa, pb) = (map(a), map(b));
            (pa.min(pb), pa.max(pb), rel.clone())
        })
        .collect();
    edges.sort();
    edges
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    permute(&mut items, 0, &mut out);
    out
}

fn permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Undirected label-preserving isomorphism by exhaustive permutation search.
pub fn isomorphic_by_permutation(a: &PropertyGraph, b: &PropertyGraph) -> bool {
    let (sa, sb) = (skeleton(a), skeleton(b));
    if sa.labels.len() != sb.labels.len() || sa.edges.len() != sb.edges.len() {
        return false;
    }
    let target = edge_multiset(&sb, None);
    for perm in permutations(sa.labels.len()) {
        let labels_ok = (0..sa.labels.len()).all(|v| sa.labels[v] == sb.labels[perm[v]]);
        if labels_ok && edge_multiset(&sa, Some(&perm)) == target {
            return true;
        }
    }
    false
}

/// Plain union-find, the reference for connected components.
pub struct OracleUnionFind {
    parent: Vec<usize>,
}

impl OracleUnionFind {
    pub fn new(n: usize) -> Self {
        OracleUnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub fn prov(tag: SourceTag) -> Provenance {
    Provenance::from([tag])
}

/// Builds a graph straight from a label skeleton.
pub fn graph_from_skeleton(labels: &[&str], edges: &[(usize, usize, &str)]) -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let ids: Vec<_> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            g.add_node(format!("N{i}"), *l, Tier::DomainInternal, Properties::new(), prov(SourceTag::Plc))
                .unwrap()
        })
        .collect();
    for &(a, b, rel) in edges {
        g.add_edge(&ids[a], &ids[b], rel, Tier::DomainInternal, Properties::new(), prov(SourceTag::Plc))
            .unwrap();
    }
    g
}

/// Every labeled undirected graph on exactly `n` nodes: node labels drawn
/// from `node_labels`, every vertex pair independently absent or carrying one
/// of `edge_labels`.
pub fn enumerate_labeled_graphs(
    n: usize,
    node_labels: &[&str],
    edge_labels: &[&str],
) -> Vec<PropertyGraph> {
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
    let edge_states = edge_labels.len() + 1;
    let mut out = Vec::new();
    let mut labeling = vec![0usize; n];
    loop {
        let mut edging = vec![0usize; pairs.len()];
        loop {
            let labels: Vec<&str> = labeling.iter().map(|&i| node_labels[i]).collect();
            let edges: Vec<(usize, usize, &str)> = pairs
                .iter()
                .zip(&edging)
                .filter(|(_, &state)| state > 0)
                .map(|(&(a, b), &state)| (a, b, edge_labels[state - 1]))
                .collect();
            out.push(graph_from_skeleton(&labels, &edges));
            if !increment(&mut edging, edge_states) {
                break;
            }
        }
        if !increment(&mut labeling, node_labels.len()) {
            break;
        }
    }
    out
}

fn increment(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Randomized three-source fixture: one ground-truth component set whose
/// names reappear across the parts under case variation, alias types,
/// ancestor types or sibling types. Every variation is mergeable, so the
/// merged graph must have exactly one node per ground-truth name and one
/// edge per distinct (name pair, relation).
pub fn random_source_parts(seed: u64) -> (Vec<PropertyGraph>, usize, BTreeSet<(String, String, String)>) {
    use dtgraph_core::fixtures::SplitMix64;
    let mut rng = SplitMix64::new(seed);
    let n = 6 + rng.below(10) as usize;
    let truth_types = ["StorageRow", "StoragePlace", "Conveyor", "Drive", "Widget"];
    let names: Vec<String> = (0..n).map(|i| format!("Comp{i}")).collect();
    let types: Vec<&str> =
        (0..n).map(|_| truth_types[rng.below(truth_types.len() as u64) as usize]).collect();

    let relations = ["contains", "arranged_next_to", "correlates_with", "reads"];
    let mut edges: BTreeSet<(usize, usize, String)> = BTreeSet::new();
    for _ in 0..rng.below(2 * n as u64 + 1) {
        let a = rng.below(n as u64) as usize;
        let b = rng.below(n as u64) as usize;
        if a == b {
            continue;
        }
        let rel = relations[rng.below(relations.len() as u64) as usize];
        edges.insert((a.min(b), a.max(b), rel.to_string()));
    }

    let tags = [SourceTag::Plc, SourceTag::Position, SourceTag::Io];
    // node membership per part; everything not chosen anywhere lands in part 0
    let mut membership: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); 3];
    for v in 0..n {
        let mut anywhere = false;
        for part in &mut membership {
            if rng.below(3) < 2 {
                part.insert(v);
                anywhere = true;
            }
        }
        if !anywhere {
            membership[0].insert(v);
        }
    }
    // each edge goes to one part holding both endpoints
    let mut edge_owner: Vec<(usize, (usize, usize, String))> = Vec::new();
    for e in &edges {
        let holders: Vec<usize> =
            (0..3).filter(|&p| membership[p].contains(&e.0) && membership[p].contains(&e.1)).collect();
        let owner = if holders.is_empty() {
            membership[0].insert(e.0);
            membership[0].insert(e.1);
            0
        } else {
            holders[rng.below(holders.len() as u64) as usize]
        };
        edge_owner.push((owner, e.clone()));
    }

    let mut parts = Vec::new();
    for (p, tag) in tags.iter().enumerate() {
        let mut g = PropertyGraph::new();
        let tier = if *tag == SourceTag::Io { Tier::InterDomain } else { Tier::DomainInternal };
        let mut ids: BTreeMap<usize, dtgraph_core::graph::NodeId> = BTreeMap::new();
        for &v in &membership[p] {
            let name = match rng.below(3) {
                0 => names[v].to_lowercase(),
                1 => format!(" {} ", names[v]),
                _ => names[v].clone(),
            };
            // a type spelling that still merges with the truth type
            let ty = if types[v] == "Widget" {
                "Widget".to_string()
            } else {
                match rng.below(4) {
                    0 => "Component".to_string(),
                    1 if types[v] == "StoragePlace" => "LagerPlatz".to_string(),
                    2 => {
                        // sibling type, merged by the semantic pass
                        let siblings = ["StorageRow", "StoragePlace", "Conveyor", "Drive"];
                        siblings[rng.below(4) as usize].to_string()
                    }
                    _ => types[v].to_string(),
                }
            };
            let id = g.add_node(name, ty, tier, Properties::new(), prov(*tag)).unwrap();
            ids.insert(v, id);
        }
        for (owner, (a, b, rel)) in &edge_owner {
            if *owner == p {
                g.add_edge(&ids[a], &ids[b], rel, tier, Properties::new(), prov(*tag)).unwrap();
            }
        }
        parts.push(g);
    }
    let expected_edges: BTreeSet<(String, String, String)> = edges
        .iter()
        .map(|(a, b, rel)| {
            let (na, nb) = (names[*a].to_lowercase(), names[*b].to_lowercase());
            (na.clone().min(nb.clone()), na.max(nb), rel.clone())
        })
        .collect();
    (parts, n, expected_edges)
}

pub fn is_connected_skeleton(g: &PropertyGraph) -> bool {
    let s = skeleton(g);
    if s.labels.is_empty() {
        return true;
    }
    let mut uf = OracleUnionFind::new(s.labels.len());
    for &(a, b, _) in &s.edges {
        uf.union(a, b);
    }
    let root = uf.find(0);
    (1..s.labels.len()).all(|v| uf.find(v) == root)
}

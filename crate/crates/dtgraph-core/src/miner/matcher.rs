//! Backtracking subgraph-isomorphism search for pattern embeddings.
//!
//! An embedding maps every pattern vertex to a distinct data node such that
//! each pattern edge lands on a data edge with the same relation label. Node
//! labels match exactly in exact mode; in generalized mode the pattern label
//! may be any ancestor of the data node's type. Relation labels always match
//! exactly.
//!
//! Candidates are tried rarest label first and the full result is sorted by
//! assignment, so the output order is deterministic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, PropertyGraph, TierSet};
use crate::ontology::Taxonomy;

use super::dfs_code::PatternGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Exact,
    Generalized,
}

/// Injective assignment of pattern vertex index to data node id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    pub assignment: Vec<NodeId>,
}

/// Flattened read-only view of the data graph the miner searches in.
/// Self-loops are dropped: a loop can never be part of a rightmost-path
/// pattern, so it is residual-only structure.
#[derive(Debug, Clone)]
pub struct DataView {
    node_ids: Vec<NodeId>,
    labels: Vec<String>,
    index: std::collections::HashMap<NodeId, usize>,
    adj: Vec<Vec<(usize, usize)>>, // (neighbor, edge index)
    edge_rel: Vec<String>,
    edge_ends: Vec<(usize, usize)>,
}

impl DataView {
    pub fn from_graph(g: &PropertyGraph) -> DataView {
        Self::filtered(g, &TierSet::all(), None)
    }

    /// View of the nodes within `tiers` (minus anything not in `alive`, when
    /// given) and the edges within `tiers` joining two visible nodes.
    pub fn filtered(g: &PropertyGraph, tiers: &TierSet, alive: Option<&BTreeSet<NodeId>>) -> DataView {
        let visible = |id: &NodeId| alive.is_none_or(|set| set.contains(id));
        let mut node_ids = Vec::new();
        let mut labels = Vec::new();
        let mut index = std::collections::HashMap::new();
        for node in g.nodes() {
            if tiers.contains(node.tier) && visible(&node.id) {
                index.insert(node.id.clone(), node_ids.len());
                node_ids.push(node.id.clone());
                labels.push(node.type_term.clone());
            }
        }
        let mut adj = vec![Vec::new(); node_ids.len()];
        let mut edge_rel = Vec::new();
        let mut edge_ends = Vec::new();
        for edge in g.edges() {
            if !tiers.contains(edge.tier) || edge.src == edge.dst {
                continue;
            }
            let (Some(&s), Some(&d)) = (index.get(&edge.src), index.get(&edge.dst)) else {
                continue;
            };
            let eidx = edge_rel.len();
            edge_rel.push(edge.relation.clone());
            edge_ends.push((s, d));
            adj[s].push((d, eidx));
            adj[d].push((s, eidx));
        }
        DataView { node_ids, labels, index, adj, edge_rel, edge_ends }
    }

    /// Treats another pattern as the data graph; used for containment checks
    /// between mined patterns.
    pub fn from_pattern(p: &PatternGraph) -> DataView {
        let node_ids: Vec<NodeId> = (0..p.node_count()).map(|i| NodeId::new(format!("p{i}"))).collect();
        let index = node_ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let labels = p.labels().to_vec();
        let mut adj = vec![Vec::new(); p.node_count()];
        let mut edge_rel = Vec::new();
        let mut edge_ends = Vec::new();
        for (a, b, le) in p.edges() {
            let eidx = edge_rel.len();
            edge_rel.push(le.clone());
            edge_ends.push((*a, *b));
            adj[*a].push((*b, eidx));
            adj[*b].push((*a, eidx));
        }
        DataView { node_ids, labels, index, adj, edge_rel, edge_ends }
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_rel.len()
    }

    pub fn node_id(&self, v: usize) -> &NodeId {
        &self.node_ids[v]
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub(crate) fn adjacency(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub(crate) fn edge_relation(&self, e: usize) -> &str {
        &self.edge_rel[e]
    }

    pub(crate) fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        self.edge_ends[e]
    }
}

pub(crate) fn label_compatible(
    data_label: &str,
    pattern_label: &str,
    mode: MatchMode,
    taxonomy: &Taxonomy,
) -> bool {
    match mode {
        MatchMode::Exact => data_label == pattern_label,
        MatchMode::Generalized => taxonomy.subtype_lenient(data_label, pattern_label),
    }
}

/// Enumerates all embeddings of `pattern` into `data`, sorted by assignment.
pub fn embeddings_in_view(
    pattern: &PatternGraph,
    data: &DataView,
    mode: MatchMode,
    taxonomy: &Taxonomy,
) -> Vec<Embedding> {
    let k = pattern.node_count();
    if k == 0 || k > data.node_count() {
        return Vec::new();
    }

    // candidate pools per pattern vertex
    let pools: Vec<Vec<usize>> = (0..k)
        .map(|pv| {
            (0..data.node_count())
                .filter(|&dv| label_compatible(data.label(dv), &pattern.labels()[pv], mode, taxonomy))
                .collect()
        })
        .collect();
    if pools.iter().any(Vec::is_empty) {
        return Vec::new();
    }

    // search order: rarest pool first, then grow connected
    let mut order = Vec::with_capacity(k);
    let mut in_order = vec![false; k];
    let start = (0..k).min_by_key(|&v| (pools[v].len(), v)).unwrap();
    order.push(start);
    in_order[start] = true;
    while order.len() < k {
        let next = (0..k)
            .filter(|&v| !in_order[v] && pattern.adjacency(v).iter().any(|&(u, _)| in_order[u]))
            .min_by_key(|&v| (pools[v].len(), v))
            .expect("pattern is connected");
        order.push(next);
        in_order[next] = true;
    }

    let mut assignment: Vec<Option<usize>> = vec![None; k];
    let mut used: Vec<bool> = vec![false; data.node_count()];
    let mut results = Vec::new();
    place(pattern, data, mode, taxonomy, &order, 0, &mut assignment, &mut used, &mut results);
    results.sort();
    results
}

#[allow(clippy::too_many_arguments)]
fn place(
    pattern: &PatternGraph,
    data: &DataView,
    mode: MatchMode,
    taxonomy: &Taxonomy,
    order: &[usize],
    depth: usize,
    assignment: &mut Vec<Option<usize>>,
    used: &mut Vec<bool>,
    results: &mut Vec<Embedding>,
) {
    if depth == order.len() {
        let ids = assignment.iter().map(|a| data.node_id(a.unwrap()).clone()).collect();
        results.push(Embedding { assignment: ids });
        return;
    }
    let pv = order[depth];

    // candidates: neighbors of some already-placed pattern neighbor, or the
    // full compatible pool for the first vertex
    let anchor = pattern.adjacency(pv).iter().find(|&&(u, _)| assignment[u].is_some());
    let mut candidates: Vec<usize> = match anchor {
        Some(&(u, eidx)) => {
            let du = assignment[u].unwrap();
            let rel = &pattern.edges()[eidx].2;
            data.adjacency(du)
                .iter()
                .filter(|&&(_, de)| data.edge_relation(de) == rel)
                .map(|&(dv, _)| dv)
                .collect()
        }
        None => (0..data.node_count()).collect(),
    };
    candidates.sort_unstable();
    candidates.dedup();

    'cand: for dv in candidates {
        if used[dv] || !label_compatible(data.label(dv), &pattern.labels()[pv], mode, taxonomy) {
            continue;
        }
        // every pattern edge from pv to a placed vertex must exist in data
        for &(u, eidx) in pattern.adjacency(pv) {
            if let Some(du) = assignment[u] {
                let rel = &pattern.edges()[eidx].2;
                let ok = data
                    .adjacency(dv)
                    .iter()
                    .any(|&(n, de)| n == du && data.edge_relation(de) == rel);
                if !ok {
                    continue 'cand;
                }
            }
        }
        assignment[pv] = Some(dv);
        used[dv] = true;
        place(pattern, data, mode, taxonomy, order, depth + 1, assignment, used, results);
        assignment[pv] = None;
        used[dv] = false;
    }
}

/// Minimum node image support: the minimum over pattern vertices of how many
/// distinct data nodes that vertex maps to across all embeddings. This is the
/// standard anti-monotone frequency for mining in one large graph rather than
/// a transaction set.
pub fn mni_support(embeddings: &[Embedding], pattern_nodes: usize) -> usize {
    if embeddings.is_empty() || pattern_nodes == 0 {
        return 0;
    }
    (0..pattern_nodes)
        .map(|v| {
            embeddings
                .iter()
                .map(|e| &e.assignment[v])
                .collect::<BTreeSet<_>>()
                .len()
        })
        .min()
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Properties, Provenance, SourceTag, Tier};

    fn taxonomy() -> Taxonomy {
        Taxonomy::load(
            r#"{"types":[
                {"name":"Component","parent":"Thing"},
                {"name":"StoragePlace","parent":"Component"},
                {"name":"Conveyor","parent":"Component"}
            ]}"#,
        )
        .unwrap()
    }

    fn data_with_places(n: usize) -> PropertyGraph {
        let mut g = PropertyGraph::new();
        for i in 0..n {
            g.add_node(format!("P{i}"), "StoragePlace", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc]))
                .unwrap();
        }
        g
    }

    #[test]
    fn single_node_pattern_exact_vs_generalized() {
        let g = data_with_places(3);
        let view = DataView::from_graph(&g);
        let pattern = PatternGraph::single_node("Component");
        let t = taxonomy();
        assert_eq!(embeddings_in_view(&pattern, &view, MatchMode::Exact, &t).len(), 0);
        let general = embeddings_in_view(&pattern, &view, MatchMode::Generalized, &t);
        assert_eq!(general.len(), 3);
        assert_eq!(mni_support(&general, 1), 3);
    }

    #[test]
    fn pattern_larger_than_data_has_no_embeddings() {
        let g = data_with_places(1);
        let view = DataView::from_graph(&g);
        let pattern = PatternGraph::new(
            vec!["StoragePlace".into(), "StoragePlace".into()],
            vec![(0, 1, "arranged_next_to".into())],
        )
        .unwrap();
        assert!(embeddings_in_view(&pattern, &view, MatchMode::Exact, &taxonomy()).is_empty());
    }

    #[test]
    fn triangle_single_edge_support_is_three() {
        let mut g = PropertyGraph::new();
        let ids: Vec<_> = (0..3)
            .map(|i| {
                g.add_node(format!("N{i}"), "X", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc]))
                    .unwrap()
            })
            .collect();
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            g.add_edge(&ids[a], &ids[b], "r", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc]))
                .unwrap();
        }
        let view = DataView::from_graph(&g);
        let pattern =
            PatternGraph::new(vec!["X".into(), "X".into()], vec![(0, 1, "r".into())]).unwrap();
        let embs = embeddings_in_view(&pattern, &view, MatchMode::Exact, &Taxonomy::empty());
        assert_eq!(embs.len(), 6); // both orientations of each triangle edge
        assert_eq!(mni_support(&embs, 2), 3);
    }

    #[test]
    fn zero_embeddings_zero_support() {
        assert_eq!(mni_support(&[], 4), 0);
    }

    #[test]
    fn disjoint_embeddings_support_equals_count() {
        let embs: Vec<Embedding> = (0..4)
            .map(|k| Embedding {
                assignment: vec![NodeId::new(format!("a{k}")), NodeId::new(format!("b{k}"))],
            })
            .collect();
        assert_eq!(mni_support(&embs, 2), 4);
    }

    #[test]
    fn relation_labels_must_match() {
        let mut g = PropertyGraph::new();
        let a = g.add_node("A", "X", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc])).unwrap();
        let b = g.add_node("B", "X", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc])).unwrap();
        g.add_edge(&a, &b, "reads", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc])).unwrap();
        let view = DataView::from_graph(&g);
        let wrong =
            PatternGraph::new(vec!["X".into(), "X".into()], vec![(0, 1, "writes".into())]).unwrap();
        assert!(embeddings_in_view(&wrong, &view, MatchMode::Exact, &Taxonomy::empty()).is_empty());
    }

    #[test]
    fn embeddings_are_sorted_and_injective() {
        let g = data_with_places(4);
        let view = DataView::from_graph(&g);
        let pattern = PatternGraph::single_node("StoragePlace");
        let embs = embeddings_in_view(&pattern, &view, MatchMode::Exact, &Taxonomy::empty());
        let mut sorted = embs.clone();
        sorted.sort();
        assert_eq!(embs, sorted);
        assert_eq!(embs.len(), 4);
    }
}

//! Combines partial graphs from the three sources into one knowledge graph.
//!
//! Merging runs in two passes over nodes grouped by normalized name. The
//! label pass collapses nodes whose canonicalized type terms are equal or
//! subtype-related (the more specific type wins). The semantic pass then
//! collapses remaining same-name nodes whose types share an ancestor below
//! the taxonomy root, generalizing the type to that ancestor. Equivalence is
//! closed transitively with a union-find, so merge chains resolve
//! deterministically.
//!
//! Output ids are regenerated in sorted order, which makes the merged graph
//! byte-identical regardless of the order the parts are given in.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{
    GraphError, Node, NodeId, Properties, PropertyGraph, Provenance, SourceTag, Tier,
};
use crate::ontology::{Taxonomy, ROOT};

#[derive(Error, Debug)]
pub enum MergeError {
    #[error("source priority must list each of plc, position, io exactly once")]
    InvalidPriority,
    #[error("cannot merge directed and undirected graphs together")]
    MixedDirectedness,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Knobs for name normalization, property conflicts and the semantic pass.
#[derive(Debug, Clone)]
pub struct MergePolicy {
    pub case_fold: bool,
    pub trim: bool,
    /// Source winning a property conflict; earlier wins.
    pub priority: [SourceTag; 3],
    pub semantic_merge: bool,
}

impl Default for MergePolicy {
    fn default() -> Self {
        MergePolicy {
            case_fold: true,
            trim: true,
            priority: [SourceTag::Plc, SourceTag::Io, SourceTag::Position],
            semantic_merge: true,
        }
    }
}

impl MergePolicy {
    pub fn validate(&self) -> Result<(), MergeError> {
        let set: BTreeSet<SourceTag> = self.priority.into_iter().collect();
        if set.len() != 3 {
            return Err(MergeError::InvalidPriority);
        }
        Ok(())
    }

    fn priority_rank(&self, tag: SourceTag) -> usize {
        self.priority.iter().position(|&t| t == tag).unwrap_or(usize::MAX)
    }

    /// Rank of the best source in a provenance set; lower is stronger.
    fn provenance_rank(&self, prov: &Provenance) -> usize {
        prov.iter().map(|&t| self.priority_rank(t)).min().unwrap_or(usize::MAX)
    }
}

pub fn normalize_name(name: &str, policy: &MergePolicy) -> String {
    let mut out = name.to_string();
    if policy.trim {
        out = out.trim().to_string();
    }
    if policy.case_fold {
        out = out.to_lowercase();
    }
    out
}

/// Label-pass equivalence: names agree under normalization and the
/// canonicalized types are equal or subtype-related.
pub fn node_equivalent(a: &Node, b: &Node, taxonomy: &Taxonomy, policy: &MergePolicy) -> bool {
    if normalize_name(&a.name, policy) != normalize_name(&b.name, policy) {
        return false;
    }
    let ta = taxonomy.canonical_type(&a.type_term);
    let tb = taxonomy.canonical_type(&b.type_term);
    ta.name() == tb.name()
        || taxonomy.subtype_lenient(ta.name(), tb.name())
        || taxonomy.subtype_lenient(tb.name(), ta.name())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PropertyConflict {
    pub node: String,
    pub key: String,
    pub chosen_source: SourceTag,
}

#[derive(Debug, Clone, Serialize, Default, PartialEq)]
pub struct MergeReport {
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub merged_by_label: usize,
    pub merged_by_semantics: usize,
    pub property_conflicts: Vec<PropertyConflict>,
    pub component_count: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    /// Returns true when two previously distinct classes were joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // deterministic: smaller index becomes the root
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

/// A node crossing the merge, tagged with its canonicalized type.
struct WorkNode {
    node: Node,
    norm_name: String,
    canon_type: String,
}

/// Merges the given partial graphs into one graph plus a report of what was
/// collapsed. Parts must agree on directedness.
pub fn merge_graphs(
    parts: &[PropertyGraph],
    taxonomy: &Taxonomy,
    policy: &MergePolicy,
) -> Result<(PropertyGraph, MergeReport), MergeError> {
    policy.validate()?;
    let directed = match parts.first() {
        Some(first) => {
            if parts.iter().any(|p| p.is_directed() != first.is_directed()) {
                return Err(MergeError::MixedDirectedness);
            }
            first.is_directed()
        }
        None => false,
    };

    // flatten parts; (part index, node id) -> work index
    let mut work: Vec<WorkNode> = Vec::new();
    let mut index_of: BTreeMap<(usize, NodeId), usize> = BTreeMap::new();
    for (pi, part) in parts.iter().enumerate() {
        for node in part.nodes() {
            index_of.insert((pi, node.id.clone()), work.len());
            work.push(WorkNode {
                norm_name: normalize_name(&node.name, policy),
                canon_type: taxonomy.canonical_type(&node.type_term).name().to_string(),
                node: node.clone(),
            });
        }
    }

    let mut uf = UnionFind::new(work.len());
    let mut merged_by_label = 0usize;
    let mut merged_by_semantics = 0usize;

    // group by normalized name; both passes require name agreement
    let mut by_name: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, w) in work.iter().enumerate() {
        by_name.entry(w.norm_name.as_str()).or_default().push(i);
    }

    for group in by_name.values() {
        // label pass: equal canonical types or subtype relation either way
        for (k, &i) in group.iter().enumerate() {
            for &j in &group[k + 1..] {
                let (ti, tj) = (&work[i].canon_type, &work[j].canon_type);
                let related = ti == tj
                    || taxonomy.subtype_lenient(ti, tj)
                    || taxonomy.subtype_lenient(tj, ti);
                if related && uf.union(i, j) {
                    merged_by_label += 1;
                }
            }
        }
        if !policy.semantic_merge {
            continue;
        }
        // semantic pass: remaining pairs whose types share an ancestor below the root
        for (k, &i) in group.iter().enumerate() {
            for &j in &group[k + 1..] {
                if uf.find(i) == uf.find(j) {
                    continue;
                }
                if taxonomy.generalize_lenient(&work[i].canon_type, &work[j].canon_type) != ROOT
                    && uf.union(i, j)
                {
                    merged_by_semantics += 1;
                }
            }
        }
    }

    // collect classes
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..work.len() {
        classes.entry(uf.find(i)).or_default().push(i);
    }

    let mut conflicts: Vec<PropertyConflict> = Vec::new();
    struct MergedNode {
        name: String,
        type_term: String,
        tier: Tier,
        props: Properties,
        provenance: Provenance,
        sort_key: (String, String),
    }
    let mut merged: Vec<(usize, MergedNode)> = Vec::new();
    for (&root, members) in &classes {
        let nodes: Vec<&WorkNode> = members.iter().map(|&i| &work[i]).collect();

        // type: the most specific member type when one is below all others,
        // otherwise the least common ancestor of all member types
        let type_term = resolve_class_type(&nodes, taxonomy);

        // name: smallest original name from the strongest source present
        let best_rank = nodes.iter().map(|w| policy.provenance_rank(&w.node.provenance)).min().unwrap();
        let name = nodes
            .iter()
            .filter(|w| policy.provenance_rank(&w.node.provenance) == best_rank)
            .map(|w| w.node.name.clone())
            .min()
            .unwrap();

        // tier: lowest tier claimed by the strongest source present
        let tier = nodes
            .iter()
            .filter(|w| policy.provenance_rank(&w.node.provenance) == best_rank)
            .map(|w| w.node.tier)
            .min()
            .unwrap();

        let provenance: Provenance = nodes.iter().flat_map(|w| w.node.provenance.iter().copied()).collect();
        let (props, mut prop_conflicts) = merge_properties(
            nodes.iter().map(|w| (&w.node.props, &w.node.provenance)),
            policy,
            &name,
        );
        conflicts.append(&mut prop_conflicts);

        merged.push((root, MergedNode {
            sort_key: (normalize_name(&name, policy), type_term.clone()),
            name,
            type_term,
            tier,
            props,
            provenance,
        }));
    }

    // deterministic ids: classes sorted by (normalized name, type)
    merged.sort_by(|a, b| a.1.sort_key.cmp(&b.1.sort_key));
    let mut out = if directed { PropertyGraph::new_directed() } else { PropertyGraph::new() };
    let mut root_to_id: BTreeMap<usize, NodeId> = BTreeMap::new();
    for (root, m) in merged {
        let id = out.add_node(m.name, m.type_term, m.tier, m.props, m.provenance)?;
        root_to_id.insert(root, id);
    }

    // edges: re-point endpoints at class representatives, collapse duplicates
    struct MergedEdge {
        tier: Tier,
        props_sources: Vec<(Properties, Provenance)>,
        provenance: Provenance,
        best_rank: usize,
    }
    let mut edge_classes: BTreeMap<(NodeId, NodeId, String), MergedEdge> = BTreeMap::new();
    let mut edges_before = 0usize;
    for (pi, part) in parts.iter().enumerate() {
        for edge in part.edges() {
            edges_before += 1;
            let s = root_to_id[&uf.find(index_of[&(pi, edge.src.clone())])].clone();
            let d = root_to_id[&uf.find(index_of[&(pi, edge.dst.clone())])].clone();
            let key = if directed || s <= d {
                (s, d, edge.relation.clone())
            } else {
                (d, s, edge.relation.clone())
            };
            let rank = policy.provenance_rank(&edge.provenance);
            let entry = edge_classes.entry(key).or_insert_with(|| MergedEdge {
                tier: edge.tier,
                props_sources: Vec::new(),
                provenance: Provenance::new(),
                best_rank: usize::MAX,
            });
            if rank < entry.best_rank {
                entry.best_rank = rank;
                entry.tier = edge.tier;
            } else if rank == entry.best_rank {
                entry.tier = entry.tier.min(edge.tier);
            }
            entry.props_sources.push((edge.props.clone(), edge.provenance.clone()));
            entry.provenance.extend(edge.provenance.iter().copied());
        }
    }
    for ((s, d, relation), e) in edge_classes {
        let label = format!("{s}-[{relation}]-{d}");
        let (props, mut prop_conflicts) =
            merge_properties(e.props_sources.iter().map(|(p, prov)| (p, prov)), policy, &label);
        conflicts.append(&mut prop_conflicts);
        out.add_edge(&s, &d, relation, e.tier, props, e.provenance)?;
    }

    conflicts.sort_by(|a, b| (&a.node, &a.key).cmp(&(&b.node, &b.key)));
    let report = MergeReport {
        nodes_before: work.len(),
        nodes_after: out.node_count(),
        edges_before,
        edges_after: out.edge_count(),
        merged_by_label,
        merged_by_semantics,
        property_conflicts: conflicts,
        component_count: out.connected_components().len(),
    };
    Ok((out, report))
}

fn resolve_class_type(nodes: &[&WorkNode], taxonomy: &Taxonomy) -> String {
    let types: BTreeSet<&str> = nodes.iter().map(|w| w.canon_type.as_str()).collect();
    if types.len() == 1 {
        return nodes[0].canon_type.clone();
    }
    // most specific type that subsumes under every other member type
    for &candidate in &types {
        if types.iter().all(|&other| taxonomy.subtype_lenient(candidate, other)) {
            return candidate.to_string();
        }
    }
    let mut iter = types.iter();
    let first = *iter.next().unwrap();
    iter.fold(first.to_string(), |acc, &t| taxonomy.generalize_lenient(&acc, t))
}

fn merge_properties<'a>(
    sources: impl Iterator<Item = (&'a Properties, &'a Provenance)>,
    policy: &MergePolicy,
    element_label: &str,
) -> (Properties, Vec<PropertyConflict>) {
    // key -> (rank, value, winning source); ties broken by smaller value
    let mut chosen: BTreeMap<String, (usize, crate::graph::PropValue, SourceTag)> = BTreeMap::new();
    let mut contested: BTreeSet<String> = BTreeSet::new();
    for (props, prov) in sources {
        let rank = policy.provenance_rank(prov);
        let source = prov
            .iter()
            .copied()
            .min_by_key(|&t| policy.priority_rank(t))
            .unwrap_or(SourceTag::Plc);
        for (key, value) in props {
            match chosen.get_mut(key) {
                None => {
                    chosen.insert(key.clone(), (rank, value.clone(), source));
                }
                Some(existing) => {
                    if existing.1 != *value {
                        contested.insert(key.clone());
                        let replace = rank < existing.0 || (rank == existing.0 && *value < existing.1);
                        if replace {
                            *existing = (rank, value.clone(), source);
                        }
                    } else if rank < existing.0 {
                        existing.0 = rank;
                        existing.2 = source;
                    }
                }
            }
        }
    }
    let conflicts = contested
        .into_iter()
        .map(|key| PropertyConflict {
            node: element_label.to_string(),
            key: key.clone(),
            chosen_source: chosen[&key].2,
        })
        .collect();
    (chosen.into_iter().map(|(k, (_, v, _))| (k, v)).collect(), conflicts)
}

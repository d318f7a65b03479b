//! Frequent subgraph mining over one large labeled graph.
//!
//! The search enumerates canonical DFS codes: frequent single-edge codes seed
//! the recursion, each code grows only along its rightmost path, duplicates
//! are pruned with the minimality test, and branches below the support
//! threshold are cut (minimum-node-image support is anti-monotone, so no
//! frequent pattern is lost). Patterns keep their full embedding lists so the
//! template stage can pick instances without re-searching.
//!
//! Node names never appear in patterns: a pattern is type and relation labels
//! only, which is what lets it match across identically built assemblies with
//! different names.

mod dfs_code;
mod matcher;
mod brute;

pub use brute::{brute_force_frequent, pattern_signature};
pub use dfs_code::{is_min, min_dfs_code, DfsCode, EdgeTuple, PatternGraph};
pub use matcher::{embeddings_in_view, mni_support, DataView, Embedding, MatchMode};
pub(crate) use matcher::label_compatible;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, PropertyGraph, TierSet};
use crate::ontology::{Taxonomy, ROOT};

#[derive(Error, Debug)]
pub enum MineError {
    #[error("invalid mining parameters: {0}")]
    InvalidParams(String),
    #[error("mining is defined on undirected graphs")]
    DirectedUnsupported,
    #[error("pattern graph must be connected")]
    Disconnected,
    #[error("patterns must contain at least one edge")]
    EmptyCode,
    #[error("malformed DFS code: {0}")]
    MalformedCode(String),
    #[error("more than {limit} frequent patterns; raise min_support or lower max_edges")]
    PatternLimitExceeded { limit: usize },
    #[error("outside oracle bounds: {0}")]
    OracleBounds(String),
    #[error("pattern report: {0}")]
    Format(String),
}

pub const DEFAULT_MAX_EDGES: usize = 8;
pub const DEFAULT_PATTERN_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiningParams {
    pub min_support: usize,
    pub max_edges: usize,
    pub mode: MatchMode,
    pub closed_only: bool,
    pub tier_set: TierSet,
    pub max_patterns: usize,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            min_support: 2,
            max_edges: DEFAULT_MAX_EDGES,
            mode: MatchMode::Exact,
            closed_only: false,
            tier_set: TierSet::lower(),
            max_patterns: DEFAULT_PATTERN_LIMIT,
        }
    }
}

impl MiningParams {
    pub fn validate(&self) -> Result<(), MineError> {
        if self.min_support < 2 {
            return Err(MineError::InvalidParams(format!(
                "min_support must be at least 2, got {}",
                self.min_support
            )));
        }
        if self.max_edges < 1 {
            return Err(MineError::InvalidParams("max_edges must be at least 1".into()));
        }
        if self.max_patterns < 1 {
            return Err(MineError::InvalidParams("max_patterns must be at least 1".into()));
        }
        Ok(())
    }
}

/// A frequent pattern: canonical code, the labels-only graph it denotes, its
/// minimum-node-image support and every embedding into the mined graph.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub code: DfsCode,
    pub graph: PatternGraph,
    pub support: usize,
    pub embeddings: Vec<Embedding>,
}

/// All embeddings of a pattern into a graph. The graph must not change during
/// the call; label generalization follows `mode`.
pub fn embeddings(
    pattern: &PatternGraph,
    abox: &PropertyGraph,
    mode: MatchMode,
    taxonomy: &Taxonomy,
) -> Vec<Embedding> {
    embeddings_in_view(pattern, &DataView::from_graph(abox), mode, taxonomy)
}

/// Mines every connected pattern with `mni support >= min_support` and at
/// most `max_edges` edges from the tier-projected graph. Each pattern is
/// reported once under its canonical code; the result is sorted by
/// (edge count, code).
pub fn mine_frequent(
    abox: &PropertyGraph,
    params: &MiningParams,
    taxonomy: &Taxonomy,
) -> Result<Vec<Pattern>, MineError> {
    params.validate()?;
    if abox.is_directed() {
        return Err(MineError::DirectedUnsupported);
    }
    let view = DataView::filtered(abox, &params.tier_set, None);
    mine_view(&view, params, taxonomy)
}

pub(crate) fn mine_view(
    view: &DataView,
    params: &MiningParams,
    taxonomy: &Taxonomy,
) -> Result<Vec<Pattern>, MineError> {
    let mut miner = Miner { view, params, taxonomy, patterns: Vec::new() };
    miner.run()?;
    let mut patterns = miner.patterns;
    if params.mode == MatchMode::Generalized {
        patterns = prune_shadowed_generalizations(patterns, view, taxonomy);
    }
    patterns.sort_by(|a, b| {
        a.graph
            .edge_count()
            .cmp(&b.graph.edge_count())
            .then_with(|| a.code.cmp_code(&b.code))
    });
    if params.closed_only {
        patterns = filter_closed(&patterns);
    }
    Ok(patterns)
}

struct Miner<'a> {
    view: &'a DataView,
    params: &'a MiningParams,
    taxonomy: &'a Taxonomy,
    patterns: Vec<Pattern>,
}

/// Extension candidate ordered by the shared-prefix tuple order.
#[derive(PartialEq, Eq)]
struct Cand(EdgeTuple);

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp_extension(&other.0).then_with(|| {
            (self.0.i, self.0.j, &self.0.li, &self.0.le, &self.0.lj).cmp(&(
                other.0.i,
                other.0.j,
                &other.0.li,
                &other.0.le,
                &other.0.lj,
            ))
        })
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Miner<'a> {
    /// Labels a data node may appear under: just its type in exact mode, the
    /// whole ancestor chain in generalized mode.
    fn labels_of(&self, dv: usize) -> Vec<String> {
        match self.params.mode {
            MatchMode::Exact => vec![self.view.label(dv).to_string()],
            MatchMode::Generalized => self.taxonomy.ancestors_lenient(self.view.label(dv)),
        }
    }

    fn run(&mut self) -> Result<(), MineError> {
        let mut seeds: BTreeSet<(String, String, String)> = BTreeSet::new();
        for e in 0..self.view.edge_count() {
            let (s, d) = self.view.edge_endpoints(e);
            let rel = self.view.edge_relation(e).to_string();
            for la in self.labels_of(s) {
                for lb in self.labels_of(d) {
                    let (x, y) = if la <= lb { (la.clone(), lb.clone()) } else { (lb.clone(), la.clone()) };
                    seeds.insert((x, rel.clone(), y));
                }
            }
        }
        for (li, le, lj) in seeds {
            let code = DfsCode::new(vec![EdgeTuple { i: 0, j: 1, li, le, lj }])?;
            self.grow(code)?;
        }
        Ok(())
    }

    fn grow(&mut self, code: DfsCode) -> Result<(), MineError> {
        let graph = code.to_graph()?;
        let embs = embeddings_in_view(&graph, self.view, self.params.mode, self.taxonomy);
        let support = mni_support(&embs, graph.node_count());
        if support < self.params.min_support {
            return Ok(());
        }
        if self.patterns.len() >= self.params.max_patterns {
            return Err(MineError::PatternLimitExceeded { limit: self.params.max_patterns });
        }
        let rm_path = code.rightmost_path();
        let rightmost = graph.node_count() - 1;
        let at_cap = code.len() >= self.params.max_edges;
        let record = Pattern { code: code.clone(), graph: graph.clone(), support, embeddings: embs.clone() };
        self.patterns.push(record);
        if at_cap {
            return Ok(());
        }

        let mut cands: BTreeSet<Cand> = BTreeSet::new();
        for emb in &embs {
            let data_idx: Vec<usize> = emb
                .assignment
                .iter()
                .map(|id| self.view.index_of(id).expect("embedding points into the view"))
                .collect();
            let placed: BTreeSet<usize> = data_idx.iter().copied().collect();

            // backward: rightmost vertex closing a cycle to the rightmost path
            let rv = data_idx[rightmost];
            for &(u, de) in self.view.adjacency(rv) {
                let rel = self.view.edge_relation(de);
                for &anc in &rm_path[1..] {
                    if data_idx[anc] == u && !graph.has_edge(rightmost, anc, rel) {
                        cands.insert(Cand(EdgeTuple {
                            i: rightmost,
                            j: anc,
                            li: graph.labels()[rightmost].clone(),
                            le: rel.to_string(),
                            lj: graph.labels()[anc].clone(),
                        }));
                    }
                }
            }
            // forward: any rightmost-path vertex out to a fresh data node
            for &src in &rm_path {
                let sv = data_idx[src];
                for &(w, de) in self.view.adjacency(sv) {
                    if placed.contains(&w) {
                        continue;
                    }
                    let rel = self.view.edge_relation(de).to_string();
                    for lw in self.labels_of(w) {
                        cands.insert(Cand(EdgeTuple {
                            i: src,
                            j: graph.node_count(),
                            li: graph.labels()[src].clone(),
                            le: rel.clone(),
                            lj: lw,
                        }));
                    }
                }
            }
        }

        for Cand(tuple) in cands {
            let mut tuples = code.tuples().to_vec();
            tuples.push(tuple);
            let child = DfsCode::new(tuples)?;
            if !is_min(&child)? {
                continue;
            }
            self.grow(child)?;
        }
        Ok(())
    }
}

/// Generalized-mode redundancy rule: a pattern whose label can be specialized
/// to a child type without losing a single embedding says nothing the
/// specialized pattern does not; drop it. Checking direct children suffices
/// because embeddings shrink monotonically down the type tree.
fn prune_shadowed_generalizations(
    patterns: Vec<Pattern>,
    view: &DataView,
    taxonomy: &Taxonomy,
) -> Vec<Pattern> {
    let mut present: BTreeSet<String> = BTreeSet::new();
    let mut unresolved_terms: BTreeSet<String> = BTreeSet::new();
    for label in view.labels() {
        for anc in taxonomy.ancestors_lenient(label) {
            present.insert(anc);
        }
        if !taxonomy.contains(label) {
            unresolved_terms.insert(label.clone());
        }
    }
    patterns
        .into_iter()
        .filter(|p| {
            for (k, label) in p.graph.labels().iter().enumerate() {
                let mut children = taxonomy.children_of(label);
                if label == ROOT {
                    children.extend(unresolved_terms.iter().cloned());
                    children.sort();
                    children.dedup();
                }
                for child in children {
                    if !present.contains(&child) {
                        continue; // no data node can carry this label
                    }
                    let mut labels = p.graph.labels().to_vec();
                    labels[k] = child;
                    let specialized = PatternGraph::new(labels, p.graph.edges().to_vec())
                        .expect("same shape as a valid pattern");
                    let embs = embeddings_in_view(&specialized, view, MatchMode::Generalized, taxonomy);
                    if embs == p.embeddings {
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

/// Keeps a pattern iff no other pattern in the list is a proper supergraph
/// with equal support.
pub fn filter_closed(patterns: &[Pattern]) -> Vec<Pattern> {
    patterns
        .iter()
        .filter(|p| {
            !patterns.iter().any(|q| {
                q.graph.edge_count() > p.graph.edge_count()
                    && q.support == p.support
                    && contains_subpattern(&q.graph, &p.graph)
            })
        })
        .cloned()
        .collect()
}

/// True when `hay` has a (not necessarily induced) subgraph isomorphic to
/// `needle`, labels matched exactly.
pub fn contains_subpattern(hay: &PatternGraph, needle: &PatternGraph) -> bool {
    let view = DataView::from_pattern(hay);
    !embeddings_in_view(needle, &view, MatchMode::Exact, &Taxonomy::empty()).is_empty()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PatternEntry {
    pub code: Vec<EdgeTuple>,
    pub support: usize,
    pub nodes: usize,
    pub edges: usize,
    pub embeddings: Vec<Vec<NodeId>>,
}

/// Machine-readable mining result, the interface between the mine and
/// templatize stages.
#[derive(Debug, Serialize, Deserialize)]
pub struct PatternReport {
    pub params: MiningParams,
    pub patterns: Vec<PatternEntry>,
}

impl PatternReport {
    pub fn from_patterns(params: &MiningParams, patterns: &[Pattern]) -> PatternReport {
        PatternReport {
            params: params.clone(),
            patterns: patterns
                .iter()
                .map(|p| PatternEntry {
                    code: p.code.tuples().to_vec(),
                    support: p.support,
                    nodes: p.graph.node_count(),
                    edges: p.graph.edge_count(),
                    embeddings: p.embeddings.iter().map(|e| e.assignment.clone()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_patterns(&self) -> Result<Vec<Pattern>, MineError> {
        self.patterns
            .iter()
            .map(|entry| {
                let code = DfsCode::new(entry.code.clone())?;
                let graph = code.to_graph()?;
                if entry.nodes != graph.node_count() || entry.edges != graph.edge_count() {
                    return Err(MineError::Format(format!(
                        "entry counts disagree with code {code}"
                    )));
                }
                Ok(Pattern {
                    code,
                    graph,
                    support: entry.support,
                    embeddings: entry
                        .embeddings
                        .iter()
                        .map(|a| Embedding { assignment: a.clone() })
                        .collect(),
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization is infallible");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<PatternReport, MineError> {
        serde_json::from_str(text).map_err(|e| MineError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_graph_mines_nothing() {
        let g = PropertyGraph::new();
        let params = MiningParams { min_support: 2, ..Default::default() };
        assert!(mine_frequent(&g, &params, &Taxonomy::empty()).unwrap().is_empty());
    }

    #[test]
    fn min_support_above_node_count_mines_nothing() {
        let g = fixtures::warehouse();
        let params = MiningParams { min_support: 1000, ..Default::default() };
        assert!(mine_frequent(&g, &params, &Taxonomy::empty()).unwrap().is_empty());
    }

    #[test]
    fn params_guards() {
        assert!(MiningParams { min_support: 1, ..Default::default() }.validate().is_err());
        assert!(MiningParams { max_edges: 0, ..Default::default() }.validate().is_err());
        assert!(MiningParams::default().validate().is_ok());
    }

    #[test]
    fn directed_graph_rejected() {
        let g = PropertyGraph::new_directed();
        let err = mine_frequent(&g, &MiningParams { min_support: 2, ..Default::default() }, &Taxonomy::empty());
        assert!(matches!(err, Err(MineError::DirectedUnsupported)));
    }

    #[test]
    fn warehouse_row_pattern_found_with_support_four() {
        let g = fixtures::warehouse();
        let params = MiningParams { min_support: 4, ..Default::default() };
        let patterns = mine_frequent(&g, &params, &fixtures::taxonomy()).unwrap();
        assert!(!patterns.is_empty());
        // the full row: one StorageRow holding three chained StoragePlaces
        let row = patterns
            .iter()
            .find(|p| p.graph.node_count() == 4 && p.graph.edge_count() == 5)
            .expect("row pattern mined");
        assert_eq!(row.support, 4);
        // sub-patterns are kept, not filtered as unclosed
        assert!(patterns.iter().any(|p| p.graph.edge_count() == 1));
        // every pattern reported once
        let mut codes: Vec<String> = patterns.iter().map(|p| p.code.to_string()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), patterns.len());
    }

    #[test]
    fn pattern_limit_overflows_loudly() {
        let g = fixtures::warehouse();
        let params = MiningParams { min_support: 2, max_patterns: 3, ..Default::default() };
        let err = mine_frequent(&g, &params, &fixtures::taxonomy());
        assert!(matches!(err, Err(MineError::PatternLimitExceeded { limit: 3 })));
    }

    #[test]
    fn mining_is_deterministic() {
        let g = fixtures::warehouse();
        let params = MiningParams { min_support: 4, ..Default::default() };
        let a = mine_frequent(&g, &params, &fixtures::taxonomy()).unwrap();
        let b = mine_frequent(&g, &params, &fixtures::taxonomy()).unwrap();
        let ra = PatternReport::from_patterns(&params, &a).to_json();
        let rb = PatternReport::from_patterns(&params, &b).to_json();
        assert_eq!(ra, rb);
    }

    #[test]
    fn closed_filter_drops_equal_support_subpatterns() {
        let g = fixtures::warehouse();
        let open = mine_frequent(&g, &MiningParams { min_support: 4, ..Default::default() }, &fixtures::taxonomy()).unwrap();
        let closed = filter_closed(&open);
        assert!(closed.len() < open.len());
        // the maximal row pattern survives
        assert!(closed.iter().any(|p| p.graph.edge_count() == 5));
        // support-4 single contains-edge is subsumed by the row pattern
        assert!(!closed
            .iter()
            .any(|p| p.graph.edge_count() == 1 && p.support == 4 && p.code.tuples()[0].le == "contains"));
        // a sub-pattern with strictly higher support stays alongside its
        // super-pattern: the adjacency edge supports 12, the row only 4
        assert!(closed
            .iter()
            .any(|p| p.graph.edge_count() == 1 && p.support == 12 && p.code.tuples()[0].le == "arranged_next_to"));
    }

    #[test]
    fn report_round_trip() {
        let g = fixtures::warehouse();
        let params = MiningParams { min_support: 4, ..Default::default() };
        let patterns = mine_frequent(&g, &params, &fixtures::taxonomy()).unwrap();
        let report = PatternReport::from_patterns(&params, &patterns);
        let text = report.to_json();
        let back = PatternReport::from_json(&text).unwrap();
        let reparsed = back.to_patterns().unwrap();
        assert_eq!(reparsed.len(), patterns.len());
        for (a, b) in patterns.iter().zip(&reparsed) {
            assert_eq!(a.code, b.code);
            assert_eq!(a.support, b.support);
            assert_eq!(a.embeddings, b.embeddings);
        }
    }

    #[test]
    fn generalized_mode_adds_ancestor_patterns() {
        let g = fixtures::warehouse();
        let tax = fixtures::taxonomy();
        let exact = mine_frequent(&g, &MiningParams { min_support: 4, ..Default::default() }, &tax).unwrap();
        let general = mine_frequent(
            &g,
            &MiningParams { min_support: 4, mode: MatchMode::Generalized, ..Default::default() },
            &tax,
        )
        .unwrap();
        // every exact pattern stays at least as frequent under generalization
        for p in &exact {
            let view = DataView::filtered(&g, &TierSet::lower(), None);
            let gen_embs = embeddings_in_view(&p.graph, &view, MatchMode::Generalized, &tax);
            assert!(mni_support(&gen_embs, p.graph.node_count()) >= p.support);
        }
        // generalized labels appear (Component covers StorageRow and StoragePlace)
        assert!(general
            .iter()
            .any(|p| p.graph.labels().iter().any(|l| l == "Component")));
    }

    #[test]
    fn shadowed_generalization_is_pruned() {
        // every place is a StoragePlace, so a Component-labeled single-node
        // generalization over places only adds nothing on the places-only
        // fixture slice
        let mut g = PropertyGraph::new();
        use crate::graph::{Properties, Provenance, SourceTag, Tier};
        let ids: Vec<_> = (0..4)
            .map(|i| {
                g.add_node(format!("P{i}"), "StoragePlace", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc]))
                    .unwrap()
            })
            .collect();
        for w in ids.windows(2) {
            g.add_edge(&w[0], &w[1], "arranged_next_to", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Position]))
                .unwrap();
        }
        let tax = fixtures::taxonomy();
        let general = mine_frequent(
            &g,
            &MiningParams { min_support: 2, mode: MatchMode::Generalized, ..Default::default() },
            &tax,
        )
        .unwrap();
        // Component-Component edge has exactly the same embeddings as the
        // StoragePlace-StoragePlace edge, so only the specific one is kept
        assert!(general.iter().any(|p| p.graph.labels().iter().all(|l| l == "StoragePlace")));
        assert!(!general.iter().any(|p| p.graph.labels().iter().any(|l| l == "Component")));
    }
}

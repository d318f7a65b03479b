//! Canonical DFS codes for connected labeled patterns.
//!
//! A pattern is encoded as the sequence of edge tuples `(i, j, li, le, lj)`
//! discovered by a depth-first traversal; `i`/`j` are discovery indices,
//! `li`/`lj` node labels and `le` the edge label. A tuple is *forward* when it
//! introduces index `j = max + 1` and *backward* when it closes a cycle to an
//! index on the rightmost path. The canonical code of a graph is the
//! lexicographic minimum over all traversals; growth restricted to the
//! rightmost path guarantees every pattern has a unique parent in the search
//! tree.
//!
//! Tuple comparison at a shared prefix: backward extensions sort before
//! forward ones; backward ties break on (target index, edge label); forward
//! ties break on (deeper source first, edge label, target label). Label order
//! is plain byte order of the label text.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MineError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeTuple {
    pub i: usize,
    pub j: usize,
    pub li: String,
    pub le: String,
    pub lj: String,
}

impl EdgeTuple {
    pub fn is_forward(&self) -> bool {
        self.i < self.j
    }

    /// Order between candidate extensions of one shared code prefix.
    pub fn cmp_extension(&self, other: &EdgeTuple) -> Ordering {
        match (self.is_forward(), other.is_forward()) {
            (false, true) => Ordering::Less,
            (true, false) => Ordering::Greater,
            (false, false) => {
                (self.j, &self.le, &self.lj).cmp(&(other.j, &other.le, &other.lj))
            }
            (true, true) => (other.i, &self.li, &self.le, &self.lj)
                .cmp(&(self.i, &other.li, &other.le, &other.lj)),
        }
    }
}

impl fmt::Display for EdgeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{},{})", self.i, self.j, self.li, self.le, self.lj)
    }
}

impl Serialize for EdgeTuple {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (&self.i, &self.j, &self.li, &self.le, &self.lj).serialize(s)
    }
}

impl<'de> Deserialize<'de> for EdgeTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (i, j, li, le, lj): (usize, usize, String, String, String) =
            Deserialize::deserialize(d)?;
        if i == j {
            return Err(D::Error::custom("edge tuple may not be a self-loop"));
        }
        Ok(EdgeTuple { i, j, li, le, lj })
    }
}

/// Ordered list of edge tuples forming a valid rightmost-path construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DfsCode {
    tuples: Vec<EdgeTuple>,
}

impl DfsCode {
    pub fn new(tuples: Vec<EdgeTuple>) -> Result<DfsCode, MineError> {
        let code = DfsCode { tuples };
        code.validate()?;
        Ok(code)
    }

    pub fn tuples(&self) -> &[EdgeTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Structural validation: every tuple must be a legal rightmost-path
    /// extension of its prefix and labels must be consistent per index.
    pub fn validate(&self) -> Result<(), MineError> {
        if self.tuples.is_empty() {
            return Err(MineError::EmptyCode);
        }
        let first = &self.tuples[0];
        if (first.i, first.j) != (0, 1) {
            return Err(MineError::MalformedCode(format!("first tuple must join 0 and 1, got {first}")));
        }
        let mut labels: Vec<String> = vec![first.li.clone(), first.lj.clone()];
        let mut parent: Vec<usize> = vec![usize::MAX, 0];
        let mut seen: BTreeSet<(usize, usize, String)> = BTreeSet::new();
        seen.insert((0, 1, first.le.clone()));
        for t in &self.tuples[1..] {
            let n = labels.len();
            let rm_path = rightmost_path(&parent);
            if t.is_forward() {
                if t.j != n {
                    return Err(MineError::MalformedCode(format!("forward tuple {t} must introduce index {n}")));
                }
                if !rm_path.contains(&t.i) {
                    return Err(MineError::MalformedCode(format!("forward tuple {t} must start on the rightmost path")));
                }
                if labels[t.i] != t.li {
                    return Err(MineError::MalformedCode(format!("tuple {t} disagrees on label of index {}", t.i)));
                }
                labels.push(t.lj.clone());
                parent.push(t.i);
                seen.insert((t.i, t.j, t.le.clone()));
            } else {
                if t.i == t.j {
                    return Err(MineError::MalformedCode(format!("self-loop tuple {t}")));
                }
                let rightmost = n - 1;
                if t.i != rightmost {
                    return Err(MineError::MalformedCode(format!("backward tuple {t} must start at the rightmost vertex {rightmost}")));
                }
                if !rm_path.contains(&t.j) {
                    return Err(MineError::MalformedCode(format!("backward tuple {t} must end on the rightmost path")));
                }
                if labels[t.i] != t.li || labels[t.j] != t.lj {
                    return Err(MineError::MalformedCode(format!("tuple {t} disagrees on endpoint labels")));
                }
                let key = (t.j.min(t.i), t.j.max(t.i), t.le.clone());
                if !seen.insert(key) {
                    return Err(MineError::MalformedCode(format!("duplicate edge in tuple {t}")));
                }
            }
        }
        Ok(())
    }

    /// Number of distinct vertices the code introduces.
    pub fn vertex_count(&self) -> usize {
        self.tuples.iter().map(|t| t.i.max(t.j)).max().map_or(0, |m| m + 1)
    }

    /// Reconstructs the labels-only pattern graph the code denotes.
    pub fn to_graph(&self) -> Result<PatternGraph, MineError> {
        self.validate()?;
        let n = self.vertex_count();
        let mut labels = vec![String::new(); n];
        let mut edges = Vec::with_capacity(self.tuples.len());
        for t in &self.tuples {
            labels[t.i] = t.li.clone();
            labels[t.j] = t.lj.clone();
            edges.push((t.i, t.j, t.le.clone()));
        }
        PatternGraph::new(labels, edges)
    }

    /// DFS-tree parent of each vertex index; the root has no parent.
    pub fn parents(&self) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.vertex_count()];
        for t in &self.tuples {
            if t.is_forward() {
                parent[t.j] = t.i;
            }
        }
        parent
    }

    /// Rightmost path as vertex indices, deepest first, ending at the root.
    pub fn rightmost_path(&self) -> Vec<usize> {
        rightmost_path(&self.parents())
    }

    /// Plain sequence comparison with the extension order per position;
    /// total for codes compared within one search, used to sort reports.
    pub fn cmp_code(&self, other: &DfsCode) -> Ordering {
        for (a, b) in self.tuples.iter().zip(&other.tuples) {
            match a.cmp_extension(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.tuples.len().cmp(&other.tuples.len())
    }
}

impl fmt::Display for DfsCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tuples {
            t.fmt(f)?;
        }
        Ok(())
    }
}

/// Rightmost path as vertex indices, deepest first, ending at the root.
fn rightmost_path(parent: &[usize]) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = parent.len() - 1;
    loop {
        path.push(cur);
        if cur == 0 {
            break;
        }
        cur = parent[cur];
    }
    path
}

/// Connected labeled multigraph with anonymous vertices: the shape a pattern
/// matches, independent of node names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternGraph {
    labels: Vec<String>,
    edges: Vec<(usize, usize, String)>,
    adj: Vec<Vec<(usize, usize)>>, // (neighbor, edge index)
}

impl PatternGraph {
    pub fn new(labels: Vec<String>, edges: Vec<(usize, usize, String)>) -> Result<PatternGraph, MineError> {
        let n = labels.len();
        let mut adj = vec![Vec::new(); n];
        let mut keys = BTreeSet::new();
        for (idx, &(a, b, ref le)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(MineError::MalformedCode(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(MineError::MalformedCode("pattern self-loop".into()));
            }
            if !keys.insert((a.min(b), a.max(b), le.clone())) {
                return Err(MineError::MalformedCode(format!("duplicate pattern edge ({a},{b},{le})")));
            }
            adj[a].push((b, idx));
            adj[b].push((a, idx));
        }
        let g = PatternGraph { labels, edges, adj };
        if !g.is_connected() {
            return Err(MineError::Disconnected);
        }
        Ok(g)
    }

    pub fn single_node(label: impl Into<String>) -> PatternGraph {
        PatternGraph { labels: vec![label.into()], edges: Vec::new(), adj: vec![Vec::new()] }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[(usize, usize, String)] {
        &self.edges
    }

    pub(crate) fn adjacency(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize, le: &str) -> bool {
        self.adj[a].iter().any(|&(n, e)| n == b && self.edges[e].2 == le)
    }

    fn is_connected(&self) -> bool {
        let n = self.labels.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(u, _) in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == n
    }

    /// Materializes the pattern as a property graph (synthetic names, tier 1)
    /// so graph-level tooling like canonical signatures can run on it.
    pub fn to_property_graph(&self) -> crate::graph::PropertyGraph {
        use crate::graph::{Properties, PropertyGraph, Provenance, Tier};
        let mut g = PropertyGraph::new();
        let ids: Vec<_> = self
            .labels
            .iter()
            .enumerate()
            .map(|(idx, label)| {
                g.add_node(format!("v{idx}"), label, Tier::DomainInternal, Properties::new(), Provenance::new())
                    .expect("pattern labels are valid node types")
            })
            .collect();
        for (a, b, le) in &self.edges {
            g.add_edge(&ids[*a], &ids[*b], le, Tier::DomainInternal, Properties::new(), Provenance::new())
                .expect("pattern edges are valid");
        }
        g
    }
}

/// One partial traversal of the pattern graph used while computing the
/// minimal code: vertex placements plus the set of already-coded edges.
#[derive(Clone)]
struct Walk {
    map: Vec<usize>,  // code index -> graph vertex
    used: Vec<bool>,  // graph edge index -> coded?
}

/// Computes the lexicographically minimal DFS code of a connected pattern.
///
/// The code is grown one tuple at a time; at each step the minimal valid
/// extension over all live traversals is forced, so the result is the minimum
/// over every complete traversal without enumerating them.
pub fn min_dfs_code(graph: &PatternGraph) -> Result<DfsCode, MineError> {
    if graph.edge_count() == 0 {
        return Err(MineError::EmptyCode);
    }

    // minimal first tuple over all edges and orientations
    let mut first: Option<EdgeTuple> = None;
    for (a, b, le) in graph.edges() {
        for (s, d) in [(*a, *b), (*b, *a)] {
            let t = EdgeTuple {
                i: 0,
                j: 1,
                li: graph.labels()[s].clone(),
                le: le.clone(),
                lj: graph.labels()[d].clone(),
            };
            if first.as_ref().is_none_or(|f| (&t.li, &t.le, &t.lj) < (&f.li, &f.le, &f.lj)) {
                first = Some(t);
            }
        }
    }
    let first = first.expect("graph has edges");

    let mut walks: Vec<Walk> = Vec::new();
    for (idx, (a, b, le)) in graph.edges().iter().enumerate() {
        for (s, d) in [(*a, *b), (*b, *a)] {
            if graph.labels()[s] == first.li && le == &first.le && graph.labels()[d] == first.lj {
                let mut used = vec![false; graph.edge_count()];
                used[idx] = true;
                walks.push(Walk { map: vec![s, d], used });
            }
        }
    }

    let mut tuples = vec![first];
    let mut parent: Vec<usize> = vec![usize::MAX, 0];
    while tuples.len() < graph.edge_count() {
        let rm_path = rightmost_path(&parent);
        let (t, next) = force_min_extension(graph, &walks, &rm_path)
            .expect("connected graph always extends");
        if t.is_forward() {
            parent.push(t.i);
        }
        tuples.push(t);
        walks = next;
    }
    Ok(DfsCode { tuples })
}

/// Minimal extension tuple over all walks, with the walks realizing it.
fn force_min_extension(
    graph: &PatternGraph,
    walks: &[Walk],
    rm_path: &[usize],
) -> Option<(EdgeTuple, Vec<Walk>)> {
    let rightmost = rm_path[0];
    let mut best: Option<EdgeTuple> = None;
    let mut realizers: Vec<Walk> = Vec::new();

    let mut offer = |tuple: EdgeTuple, walk: Walk| {
        match &best {
            Some(b) => match tuple.cmp_extension(b) {
                Ordering::Less => {
                    best = Some(tuple);
                    realizers = vec![walk];
                }
                Ordering::Equal => realizers.push(walk),
                Ordering::Greater => {}
            },
            None => {
                best = Some(tuple);
                realizers = vec![walk];
            }
        }
    };

    for walk in walks {
        let placed: BTreeSet<usize> = walk.map.iter().copied().collect();
        // backward: rightmost vertex to an earlier rightmost-path vertex
        let rv = walk.map[rightmost];
        for &(u, eidx) in graph.adjacency(rv) {
            if walk.used[eidx] {
                continue;
            }
            for &anc in &rm_path[1..] {
                if walk.map[anc] == u {
                    let mut next = walk.clone();
                    next.used[eidx] = true;
                    offer(
                        EdgeTuple {
                            i: rightmost,
                            j: anc,
                            li: graph.labels()[rv].clone(),
                            le: graph.edges()[eidx].2.clone(),
                            lj: graph.labels()[u].clone(),
                        },
                        next,
                    );
                }
            }
        }
        // forward: any rightmost-path vertex to an unplaced vertex
        for &src in rm_path {
            let sv = walk.map[src];
            for &(u, eidx) in graph.adjacency(sv) {
                if walk.used[eidx] || placed.contains(&u) {
                    continue;
                }
                let mut next = walk.clone();
                next.used[eidx] = true;
                next.map.push(u);
                offer(
                    EdgeTuple {
                        i: src,
                        j: walk.map.len(),
                        li: graph.labels()[sv].clone(),
                        le: graph.edges()[eidx].2.clone(),
                        lj: graph.labels()[u].clone(),
                    },
                    next,
                );
            }
        }
    }
    best.map(|t| (t, realizers))
}

/// True iff the code equals the minimal DFS code of the graph it denotes.
/// Non-minimal codes are pruned from the search: none of their extensions can
/// be minimal either.
pub fn is_min(code: &DfsCode) -> Result<bool, MineError> {
    code.validate()?;
    let graph = code.to_graph()?;
    let min = min_dfs_code(&graph)?;
    Ok(min == *code)
}

//! Exact canonical form for labeled graphs.
//!
//! Node names, tiers and properties are ignored: two graphs get the same
//! signature iff there is a bijection between them preserving node type
//! terms, edge relations and (in directed mode) edge orientation.
//!
//! The form is computed by color refinement plus individualization: nodes are
//! partitioned by label, the partition is refined to equitability, and while
//! any cell is non-singleton the search branches on each of its members. Each
//! discrete leaf yields an encoding of the relabeled graph; the signature is
//! the lexicographic minimum over all leaves, which makes it independent of
//! node identity and insertion order.

use std::collections::BTreeMap;

use super::PropertyGraph;

struct View {
    n: usize,
    directed: bool,
    node_label: Vec<u32>,
    node_label_names: Vec<String>,
    edge_label_names: Vec<String>,
    /// Per node: (neighbor, edge label, direction) with direction 0 for
    /// undirected/outgoing and 1 for incoming. Self-loops appear once.
    adj: Vec<Vec<(usize, u32, u8)>>,
    /// Sparse adjacency as (a, b, label) with a <= b in undirected mode.
    pairs: Vec<(usize, usize, u32)>,
}

fn build_view(g: &PropertyGraph) -> View {
    let n = g.node_count();
    let mut node_names: Vec<String> = g.nodes().iter().map(|nd| nd.type_term.clone()).collect();
    node_names.sort();
    node_names.dedup();
    let mut edge_names: Vec<String> = g.edges().iter().map(|e| e.relation.clone()).collect();
    edge_names.sort();
    edge_names.dedup();

    let node_rank: BTreeMap<&str, u32> =
        node_names.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
    let edge_rank: BTreeMap<&str, u32> =
        edge_names.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();

    let node_label: Vec<u32> = g.nodes().iter().map(|nd| node_rank[nd.type_term.as_str()]).collect();
    let mut adj: Vec<Vec<(usize, u32, u8)>> = vec![Vec::new(); n];
    let mut pairs = Vec::with_capacity(g.edge_count());
    for e in g.edges() {
        let s = g.node_pos(&e.src).expect("edge endpoints exist");
        let d = g.node_pos(&e.dst).expect("edge endpoints exist");
        let l = edge_rank[e.relation.as_str()];
        if g.is_directed() {
            adj[s].push((d, l, 0));
            if s != d {
                adj[d].push((s, l, 1));
            }
            pairs.push((s, d, l));
        } else {
            adj[s].push((d, l, 0));
            if s != d {
                adj[d].push((s, l, 0));
            }
            let (a, b) = (s.min(d), s.max(d));
            pairs.push((a, b, l));
        }
    }
    View {
        n,
        directed: g.is_directed(),
        node_label,
        node_label_names: node_names,
        edge_label_names: edge_names,
        adj,
        pairs,
    }
}

/// Refines `colors` to the coarsest stable partition compatible with it.
fn refine(view: &View, colors: &mut Vec<u32>) {
    if view.n == 0 {
        return;
    }
    type RefineKey = (u32, Vec<(u32, u32, u8)>);
    loop {
        let mut keys: Vec<RefineKey> = Vec::with_capacity(view.n);
        for v in 0..view.n {
            let mut sig: Vec<(u32, u32, u8)> =
                view.adj[v].iter().map(|&(u, l, d)| (colors[u], l, d)).collect();
            sig.sort_unstable();
            keys.push((colors[v], sig));
        }
        let mut order: Vec<usize> = (0..view.n).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
        let mut next = vec![0u32; view.n];
        let mut color = 0u32;
        for w in 1..view.n {
            if keys[order[w]] != keys[order[w - 1]] {
                color += 1;
            }
            next[order[w]] = color;
        }
        let old_classes = count_classes(colors);
        let new_classes = (color + 1) as usize;
        *colors = next;
        if new_classes == old_classes || new_classes == view.n {
            return;
        }
    }
}

fn count_classes(colors: &[u32]) -> usize {
    let mut seen: Vec<u32> = colors.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Encodes the graph under the total node order induced by a discrete coloring.
fn encode(view: &View, colors: &[u32]) -> String {
    let mut rank = vec![0usize; view.n];
    for (v, &c) in colors.iter().enumerate() {
        rank[v] = c as usize;
    }
    let mut out = String::new();
    out.push_str(if view.directed { "d;" } else { "u;" });
    for name in &view.node_label_names {
        out.push_str(&format!("{}:{};", name.len(), name));
    }
    out.push('|');
    for name in &view.edge_label_names {
        out.push_str(&format!("{}:{};", name.len(), name));
    }
    out.push('|');
    let mut labels_in_order = vec![0u32; view.n];
    for v in 0..view.n {
        labels_in_order[rank[v]] = view.node_label[v];
    }
    for l in labels_in_order {
        out.push_str(&format!("{l},"));
    }
    out.push('|');
    let mut edges: Vec<(usize, usize, u32)> = view
        .pairs
        .iter()
        .map(|&(a, b, l)| {
            let (ra, rb) = (rank[a], rank[b]);
            if view.directed {
                (ra, rb, l)
            } else {
                (ra.min(rb), ra.max(rb), l)
            }
        })
        .collect();
    edges.sort_unstable();
    for (a, b, l) in edges {
        out.push_str(&format!("{a}-{b}-{l};"));
    }
    out
}

/// True when swapping `u` and `v` (leaving everything else fixed) is an
/// automorphism. Such vertices produce identical search subtrees, so only one
/// of them needs to be branched on; this is what keeps uniform cells (isolated
/// node sets, leaf fans, cliques) from exploding factorially.
fn are_twins(view: &View, u: usize, v: usize) -> bool {
    if view.node_label[u] != view.node_label[v] {
        return false;
    }
    // per-neighbor edge label/direction multisets, partner and self excluded
    let profile = |x: usize, partner: usize| -> BTreeMap<usize, Vec<(u32, u8)>> {
        let mut map: BTreeMap<usize, Vec<(u32, u8)>> = BTreeMap::new();
        for &(w, l, d) in &view.adj[x] {
            if w != partner && w != x {
                map.entry(w).or_default().push((l, d));
            }
        }
        map.values_mut().for_each(|v| v.sort_unstable());
        map
    };
    if profile(u, v) != profile(v, u) {
        return false;
    }
    let loops = |x: usize| -> Vec<(u32, u8)> {
        let mut ls: Vec<(u32, u8)> =
            view.adj[x].iter().filter(|&&(w, _, _)| w == x).map(|&(_, l, d)| (l, d)).collect();
        ls.sort_unstable();
        ls
    };
    if loops(u) != loops(v) {
        return false;
    }
    if view.directed {
        // the swap reverses mutual edges, so both directions must agree
        let between = |x: usize, y: usize| -> Vec<u32> {
            let mut ls: Vec<u32> = view.adj[x]
                .iter()
                .filter(|&&(w, _, d)| w == y && d == 0)
                .map(|&(_, l, _)| l)
                .collect();
            ls.sort_unstable();
            ls
        };
        if between(u, v) != between(v, u) {
            return false;
        }
    }
    true
}

fn search(view: &View, colors: Vec<u32>, best: &mut Option<String>) {
    let mut colors = colors;
    refine(view, &mut colors);
    // first non-singleton cell by color value
    let mut cell_sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for &c in &colors {
        *cell_sizes.entry(c).or_insert(0) += 1;
    }
    let target = cell_sizes.iter().find(|(_, &size)| size > 1).map(|(&c, _)| c);
    match target {
        None => {
            let enc = encode(view, &colors);
            match best {
                Some(b) if *b <= enc => {}
                _ => *best = Some(enc),
            }
        }
        Some(cell) => {
            let members: Vec<usize> = (0..view.n).filter(|&v| colors[v] == cell).collect();
            let mut representatives: Vec<usize> = Vec::new();
            for &v in &members {
                if representatives.iter().any(|&r| are_twins(view, r, v)) {
                    continue;
                }
                representatives.push(v);
                // individualize v: push it ahead of the rest of its cell
                let mut branched = colors.clone();
                for (u, color) in branched.iter_mut().enumerate() {
                    if *color > cell || (*color == cell && u != v) {
                        *color += 1;
                    }
                }
                search(view, branched, best);
            }
        }
    }
}

pub(super) fn canonical_signature(g: &PropertyGraph) -> String {
    let view = build_view(g);
    if view.n == 0 {
        return if view.directed { "d;||||".to_string() } else { "u;||||".to_string() };
    }
    let colors = view.node_label.clone();
    // node_label ids are dense ranks already, a valid initial coloring
    let mut best = None;
    search(&view, colors, &mut best);
    best.expect("non-empty graph yields at least one leaf")
}

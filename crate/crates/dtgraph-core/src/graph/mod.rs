//! In-memory labeled property graph with four-tier annotations and
//! per-element source provenance.
//!
//! Nodes carry a name, a type term and key/value properties; edges carry a
//! relation label. Both are annotated with the abstraction tier they belong
//! to. A fully built graph is immutable by convention and safe to share
//! across threads for read-only traversal.

mod signature;
mod io;

pub use io::{graph_from_json, graph_to_json, to_dot, to_graphml};
pub(crate) use io::{props_from_json_map, props_to_json_map};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum GraphError {
    #[error("node name must be non-empty")]
    EmptyName,
    #[error("node type must be non-empty")]
    EmptyType,
    #[error("edge relation must be non-empty")]
    EmptyRelation,
    #[error("duplicate node id {0}")]
    DuplicateNodeId(String),
    #[error("duplicate edge id {0}")]
    DuplicateEdgeId(String),
    #[error("edge endpoint {0} does not exist")]
    DanglingEndpoint(String),
    #[error("duplicate edge {src} -[{relation}]- {dst}")]
    DuplicateEdge { src: String, dst: String, relation: String },
    #[error("invalid tier {0}, expected 1..=4")]
    InvalidTier(u8),
    #[error("invalid source tag {0:?}, expected plc, position or io")]
    InvalidSourceTag(String),
    #[error("graph has {nodes} nodes, exact canonicalization is bounded at {bound}")]
    SignatureSizeExceeded { nodes: usize, bound: usize },
    #[error("graph document: {0}")]
    Format(String),
}

/// Abstraction tier of a node or edge, ordered from domain-internal detail
/// up to the system environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    DomainInternal = 1,
    InterDomain = 2,
    SystemOfSystems = 3,
    Environment = 4,
}

impl Tier {
    pub fn from_level(level: u8) -> Result<Tier, GraphError> {
        match level {
            1 => Ok(Tier::DomainInternal),
            2 => Ok(Tier::InterDomain),
            3 => Ok(Tier::SystemOfSystems),
            4 => Ok(Tier::Environment),
            other => Err(GraphError::InvalidTier(other)),
        }
    }

    pub fn level(self) -> u8 {
        self as u8
    }
}

impl Serialize for Tier {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.level())
    }
}

impl<'de> Deserialize<'de> for Tier {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let level = u8::deserialize(d)?;
        Tier::from_level(level).map_err(serde::de::Error::custom)
    }
}

/// Which of the three ingest paths an element was observed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Plc,
    Position,
    Io,
}

impl SourceTag {
    pub const ALL: [SourceTag; 3] = [SourceTag::Plc, SourceTag::Position, SourceTag::Io];

    pub fn parse(s: &str) -> Result<SourceTag, GraphError> {
        match s {
            "plc" => Ok(SourceTag::Plc),
            "position" => Ok(SourceTag::Position),
            "io" => Ok(SourceTag::Io),
            other => Err(GraphError::InvalidSourceTag(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceTag::Plc => "plc",
            SourceTag::Position => "position",
            SourceTag::Io => "io",
        }
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar property value. Nested values are rejected at parse time so the
/// merge conflict policy stays decidable.
#[derive(Debug, Clone, PartialEq)]
pub enum PropValue {
    Text(String),
    Number(f64),
    Bool(bool),
}

impl PropValue {
    fn rank(&self) -> u8 {
        match self {
            PropValue::Text(_) => 0,
            PropValue::Number(_) => 1,
            PropValue::Bool(_) => 2,
        }
    }
}

impl Eq for PropValue {}

impl PartialOrd for PropValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PropValue {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use PropValue::*;
        match (self, other) {
            (Text(a), Text(b)) => a.cmp(b),
            (Number(a), Number(b)) => a.total_cmp(b),
            (Bool(a), Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl From<&str> for PropValue {
    fn from(s: &str) -> Self {
        PropValue::Text(s.to_string())
    }
}

impl From<f64> for PropValue {
    fn from(n: f64) -> Self {
        PropValue::Number(n)
    }
}

impl From<bool> for PropValue {
    fn from(b: bool) -> Self {
        PropValue::Bool(b)
    }
}

pub type Properties = BTreeMap<String, PropValue>;
pub type Provenance = BTreeSet<SourceTag>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(String);

impl EdgeId {
    pub fn new(id: impl Into<String>) -> Self {
        EdgeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub type_term: String,
    pub tier: Tier,
    pub props: Properties,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    pub relation: String,
    pub tier: Tier,
    pub props: Properties,
    pub provenance: Provenance,
}

/// Set of tiers used to project the graph onto a sub-view.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TierSet(BTreeSet<Tier>);

impl TierSet {
    pub fn empty() -> Self {
        TierSet(BTreeSet::new())
    }

    pub fn all() -> Self {
        TierSet([Tier::DomainInternal, Tier::InterDomain, Tier::SystemOfSystems, Tier::Environment].into())
    }

    /// The two lower tiers, where the reverse-engineered structure lives.
    pub fn lower() -> Self {
        TierSet([Tier::DomainInternal, Tier::InterDomain].into())
    }

    pub fn of(tiers: impl IntoIterator<Item = Tier>) -> Self {
        TierSet(tiers.into_iter().collect())
    }

    /// Parses a comma-separated level list such as `"1,2"`.
    pub fn parse(s: &str) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for part in s.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let level: u8 = part.parse().map_err(|_| GraphError::InvalidTier(0))?;
            set.insert(Tier::from_level(level)?);
        }
        Ok(TierSet(set))
    }

    pub fn contains(&self, tier: Tier) -> bool {
        self.0.contains(&tier)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Tier> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for TierSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let levels: Vec<String> = self.0.iter().map(|t| t.level().to_string()).collect();
        f.write_str(&levels.join(","))
    }
}

impl Serialize for TierSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let levels: Vec<u8> = self.0.iter().map(|t| t.level()).collect();
        levels.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TierSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let levels = Vec::<u8>::deserialize(d)?;
        let mut set = BTreeSet::new();
        for level in levels {
            set.insert(Tier::from_level(level).map_err(serde::de::Error::custom)?);
        }
        Ok(TierSet(set))
    }
}

/// Labeled property graph. Node and edge ids are opaque strings, unique per
/// graph; construction is single-writer.
#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    directed: bool,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    node_index: HashMap<NodeId, usize>,
    edge_index: HashMap<EdgeId, usize>,
    // (min idx, max idx, relation) in undirected mode, (src, dst, relation) in directed mode
    edge_keys: HashSet<(usize, usize, String)>,
    incident: Vec<Vec<usize>>,
    next_node: u64,
    next_edge: u64,
}

impl PropertyGraph {
    pub fn new() -> Self {
        PropertyGraph::default()
    }

    pub fn new_directed() -> Self {
        PropertyGraph { directed: true, ..PropertyGraph::default() }
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&Edge> {
        self.edge_index.get(id).map(|&i| &self.edges[i])
    }

    pub fn contains_node(&self, id: &NodeId) -> bool {
        self.node_index.contains_key(id)
    }

    pub(crate) fn node_pos(&self, id: &NodeId) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    /// Indices into `edges()` of all edges incident to the node at `pos`.
    pub(crate) fn incident_at(&self, pos: usize) -> &[usize] {
        &self.incident[pos]
    }

    pub fn add_node(
        &mut self,
        name: impl Into<String>,
        type_term: impl Into<String>,
        tier: Tier,
        props: Properties,
        provenance: Provenance,
    ) -> Result<NodeId, GraphError> {
        let id = loop {
            let candidate = NodeId::new(format!("n{}", self.next_node));
            self.next_node += 1;
            if !self.node_index.contains_key(&candidate) {
                break candidate;
            }
        };
        self.insert_node(Node {
            id: id.clone(),
            name: name.into(),
            type_term: type_term.into(),
            tier,
            props,
            provenance,
        })?;
        Ok(id)
    }

    /// Inserts a node under an explicit id, as when loading a graph document.
    pub fn insert_node(&mut self, node: Node) -> Result<(), GraphError> {
        if node.name.trim().is_empty() {
            return Err(GraphError::EmptyName);
        }
        if node.type_term.trim().is_empty() {
            return Err(GraphError::EmptyType);
        }
        if self.node_index.contains_key(&node.id) {
            return Err(GraphError::DuplicateNodeId(node.id.to_string()));
        }
        self.node_index.insert(node.id.clone(), self.nodes.len());
        self.incident.push(Vec::new());
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_edge(
        &mut self,
        src: &NodeId,
        dst: &NodeId,
        relation: impl Into<String>,
        tier: Tier,
        props: Properties,
        provenance: Provenance,
    ) -> Result<EdgeId, GraphError> {
        let id = loop {
            let candidate = EdgeId::new(format!("e{}", self.next_edge));
            self.next_edge += 1;
            if !self.edge_index.contains_key(&candidate) {
                break candidate;
            }
        };
        self.insert_edge(Edge {
            id: id.clone(),
            src: src.clone(),
            dst: dst.clone(),
            relation: relation.into(),
            tier,
            props,
            provenance,
        })?;
        Ok(id)
    }

    /// Inserts an edge under an explicit id, as when loading a graph document.
    pub fn insert_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        if edge.relation.trim().is_empty() {
            return Err(GraphError::EmptyRelation);
        }
        if self.edge_index.contains_key(&edge.id) {
            return Err(GraphError::DuplicateEdgeId(edge.id.to_string()));
        }
        let si = *self
            .node_index
            .get(&edge.src)
            .ok_or_else(|| GraphError::DanglingEndpoint(edge.src.to_string()))?;
        let di = *self
            .node_index
            .get(&edge.dst)
            .ok_or_else(|| GraphError::DanglingEndpoint(edge.dst.to_string()))?;
        let key = if self.directed {
            (si, di, edge.relation.clone())
        } else {
            (si.min(di), si.max(di), edge.relation.clone())
        };
        if !self.edge_keys.insert(key) {
            return Err(GraphError::DuplicateEdge {
                src: edge.src.to_string(),
                dst: edge.dst.to_string(),
                relation: edge.relation.clone(),
            });
        }
        let pos = self.edges.len();
        self.edge_index.insert(edge.id.clone(), pos);
        self.incident[si].push(pos);
        if di != si {
            self.incident[di].push(pos);
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn has_edge_between(&self, a: &NodeId, b: &NodeId, relation: &str) -> bool {
        match (self.node_pos(a), self.node_pos(b)) {
            (Some(ai), Some(bi)) => {
                let key = if self.directed {
                    (ai, bi, relation.to_string())
                } else {
                    (ai.min(bi), ai.max(bi), relation.to_string())
                };
                self.edge_keys.contains(&key)
            }
            _ => false,
        }
    }

    /// Induced subgraph of the nodes whose tier is in `tiers`; edges survive
    /// when their own tier is in the set and both endpoints survive. Element
    /// ids are preserved.
    pub fn project_tiers(&self, tiers: &TierSet) -> PropertyGraph {
        let mut out = if self.directed { PropertyGraph::new_directed() } else { PropertyGraph::new() };
        for node in &self.nodes {
            if tiers.contains(node.tier) {
                out.insert_node(node.clone()).expect("projection preserves node validity");
            }
        }
        for edge in &self.edges {
            if tiers.contains(edge.tier)
                && out.contains_node(&edge.src)
                && out.contains_node(&edge.dst)
            {
                out.insert_edge(edge.clone()).expect("projection preserves edge validity");
            }
        }
        out
    }

    /// Partition of the node ids into connected components, ignoring edge
    /// direction. Blocks and their members are sorted for determinism.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut block = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                block.push(self.nodes[v].id.clone());
                for &e in &self.incident[v] {
                    let edge = &self.edges[e];
                    for endpoint in [&edge.src, &edge.dst] {
                        let u = self.node_index[endpoint];
                        if !seen[u] {
                            seen[u] = true;
                            stack.push(u);
                        }
                    }
                }
            }
            block.sort();
            components.push(block);
        }
        components.sort();
        components
    }

    /// Canonical text form equal for two graphs iff they are isomorphic under
    /// name-agnostic labels (node type term, edge relation). Exact up to the
    /// default bound of 64 nodes.
    pub fn canonical_signature(&self) -> Result<String, GraphError> {
        self.canonical_signature_bounded(64)
    }

    pub fn canonical_signature_bounded(&self, bound: usize) -> Result<String, GraphError> {
        if self.nodes.len() > bound {
            return Err(GraphError::SignatureSizeExceeded { nodes: self.nodes.len(), bound });
        }
        Ok(signature::canonical_signature(self))
    }

    /// Sorted multisets of node type terms and edge relations; the cheap
    /// isomorphism-necessary summary used when a graph exceeds the exact
    /// canonicalization bound.
    pub fn label_multisets(&self) -> (Vec<String>, Vec<String>) {
        let mut node_labels: Vec<String> = self.nodes.iter().map(|n| n.type_term.clone()).collect();
        let mut edge_labels: Vec<String> = self.edges.iter().map(|e| e.relation.clone()).collect();
        node_labels.sort();
        edge_labels.sort();
        (node_labels, edge_labels)
    }
}

//! Parsers for the three source record formats.
//!
//! Each source ships its findings as a JSON record file; parsing turns it
//! into a partial property graph carrying that source's provenance tag. The
//! upstream analytics that produce the records are out of scope here — the
//! file contracts are the interface.
//!
//! Parsers are pure: the same file yields the same graph, node ids follow
//! record order, and files parse independently of one another.

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::graph::{GraphError, NodeId, Properties, PropertyGraph, Provenance, SourceTag, Tier};

/// Relations a control-code analysis may assert.
pub const PLC_RELATIONS: [&str; 4] = ["functional_group", "contains", "reads", "writes"];

pub const DEFAULT_ARRANGEMENT_THRESHOLD: f64 = 1.0;
pub const DEFAULT_IO_CUTOFF: f64 = 0.8;

#[derive(Error, Debug)]
pub enum IngestError {
    #[error("record file: {0}")]
    Format(String),
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
    #[error("record {index}: unknown relation {relation:?}, expected one of {PLC_RELATIONS:?}")]
    UnknownRelation { index: usize, relation: String },
    #[error("element {name} declared with conflicting types {first} and {second}")]
    ConflictingType { name: String, first: String, second: String },
    #[error("record {index}: correlation weight {weight} outside [0, 1]")]
    WeightOutOfRange { index: usize, weight: f64 },
    #[error("arrangement threshold must be positive, got {0}")]
    NonPositiveThreshold(f64),
    #[error("expected source {expected}, file declares {found}")]
    SourceMismatch { expected: String, found: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Deserialize)]
struct RecordFile {
    source: String,
    records: Vec<Value>,
}

fn parse_records<T: for<'de> Deserialize<'de>>(
    text: &str,
    expected_source: &str,
) -> Result<Vec<T>, IngestError> {
    let file: RecordFile =
        serde_json::from_str(text).map_err(|e| IngestError::Format(e.to_string()))?;
    if file.source != expected_source {
        return Err(IngestError::SourceMismatch {
            expected: expected_source.to_string(),
            found: file.source,
        });
    }
    file.records
        .into_iter()
        .enumerate()
        .map(|(index, value)| {
            serde_json::from_value(value)
                .map_err(|e| IngestError::Record { index, message: e.to_string() })
        })
        .collect()
}

/// Reads the `"source"` field so callers can dispatch on file kind.
pub fn detect_source(text: &str) -> Result<SourceTag, IngestError> {
    let file: RecordFile =
        serde_json::from_str(text).map_err(|e| IngestError::Format(e.to_string()))?;
    SourceTag::parse(&file.source)
        .map_err(|_| IngestError::Format(format!("unknown source tag {:?}", file.source)))
}

#[derive(Deserialize)]
struct NamedRef {
    name: String,
    #[serde(rename = "type")]
    type_term: String,
}

#[derive(Deserialize)]
struct PlcRecord {
    subject: NamedRef,
    relation: String,
    object: NamedRef,
}

/// Helper that adds one node per distinct name, erroring when the same name
/// reappears with a different type term.
struct NodeCollector {
    graph: PropertyGraph,
    tier: Tier,
    tag: SourceTag,
}

impl NodeCollector {
    fn new(tier: Tier, tag: SourceTag) -> Self {
        NodeCollector { graph: PropertyGraph::new(), tier, tag }
    }

    fn ensure(&mut self, name: &str, type_term: &str, index: usize) -> Result<NodeId, IngestError> {
        if name.trim().is_empty() {
            return Err(IngestError::Record { index, message: "empty element name".into() });
        }
        if type_term.trim().is_empty() {
            return Err(IngestError::Record { index, message: format!("element {name} has empty type") });
        }
        if let Some(existing) = self.graph.nodes().iter().find(|n| n.name == name) {
            if existing.type_term != type_term {
                return Err(IngestError::ConflictingType {
                    name: name.to_string(),
                    first: existing.type_term.clone(),
                    second: type_term.to_string(),
                });
            }
            return Ok(existing.id.clone());
        }
        Ok(self.graph.add_node(name, type_term, self.tier, Properties::new(), Provenance::from([self.tag]))?)
    }
}

/// Parses control-code relation records: one node per distinct element name,
/// one edge per relation record, everything tier 1 with `plc` provenance.
pub fn parse_plc_relations(text: &str) -> Result<PropertyGraph, IngestError> {
    let records: Vec<PlcRecord> = parse_records(text, "plc")?;
    let mut nodes = NodeCollector::new(Tier::DomainInternal, SourceTag::Plc);
    let mut edges: Vec<(NodeId, NodeId, String)> = Vec::new();
    for (index, rec) in records.iter().enumerate() {
        if !PLC_RELATIONS.contains(&rec.relation.as_str()) {
            return Err(IngestError::UnknownRelation { index, relation: rec.relation.clone() });
        }
        let s = nodes.ensure(&rec.subject.name, &rec.subject.type_term, index)?;
        let o = nodes.ensure(&rec.object.name, &rec.object.type_term, index)?;
        edges.push((s, o, rec.relation.clone()));
    }
    let mut graph = nodes.graph;
    for (s, o, relation) in edges {
        if graph.has_edge_between(&s, &o, &relation) {
            continue; // repeated assertion of the same relation
        }
        graph.add_edge(&s, &o, relation, Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc]))?;
    }
    Ok(graph)
}

/// One located component: name, type and position in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionEntry {
    pub name: String,
    pub type_term: String,
    pub pos: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PositionSet {
    pub entries: Vec<PositionEntry>,
}

#[derive(Deserialize)]
struct PositionRecord {
    name: String,
    #[serde(rename = "type")]
    type_term: String,
    pos: Vec<f64>,
}

pub fn parse_position_records(text: &str) -> Result<PositionSet, IngestError> {
    let records: Vec<PositionRecord> = parse_records(text, "position")?;
    let mut entries = Vec::with_capacity(records.len());
    for (index, rec) in records.into_iter().enumerate() {
        if rec.name.trim().is_empty() {
            return Err(IngestError::Record { index, message: "empty element name".into() });
        }
        if rec.pos.len() != 3 {
            return Err(IngestError::Record {
                index,
                message: format!("pos must be a 3-vector, got {} components", rec.pos.len()),
            });
        }
        if rec.pos.iter().any(|c| !c.is_finite()) {
            return Err(IngestError::Record { index, message: "non-finite coordinate".into() });
        }
        if entries.iter().any(|e: &PositionEntry| e.name == rec.name) {
            return Err(IngestError::Record {
                index,
                message: format!("duplicate element name {}", rec.name),
            });
        }
        entries.push(PositionEntry {
            name: rec.name,
            type_term: rec.type_term,
            pos: [rec.pos[0], rec.pos[1], rec.pos[2]],
        });
    }
    Ok(PositionSet { entries })
}

/// Derives the physical-arrangement graph: an `arranged_next_to` edge joins
/// every pair of components within `threshold` meters (boundary inclusive).
pub fn derive_arrangement(positions: &PositionSet, threshold: f64) -> Result<PropertyGraph, IngestError> {
    if threshold.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(IngestError::NonPositiveThreshold(threshold));
    }
    let mut graph = PropertyGraph::new();
    let mut ids = Vec::with_capacity(positions.entries.len());
    for entry in &positions.entries {
        let id = graph.add_node(
            &entry.name,
            &entry.type_term,
            Tier::DomainInternal,
            Properties::new(),
            Provenance::from([SourceTag::Position]),
        )?;
        ids.push(id);
    }
    for i in 0..positions.entries.len() {
        for j in (i + 1)..positions.entries.len() {
            let a = &positions.entries[i].pos;
            let b = &positions.entries[j].pos;
            let dist = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            if dist <= threshold {
                graph.add_edge(
                    &ids[i],
                    &ids[j],
                    "arranged_next_to",
                    Tier::DomainInternal,
                    Properties::from([("distance".to_string(), dist.into())]),
                    Provenance::from([SourceTag::Position]),
                )?;
            }
        }
    }
    Ok(graph)
}

#[derive(Deserialize)]
struct IoRecord {
    a: NamedRef,
    b: NamedRef,
    weight: f64,
}

/// Parses IO-signal correlation records into `correlates_with` edges, keeping
/// only correlations at or above `cutoff`; everything is tier 2 with `io`
/// provenance. Endpoints of dropped edges are kept.
pub fn parse_io_relations(text: &str, cutoff: f64) -> Result<PropertyGraph, IngestError> {
    let records: Vec<IoRecord> = parse_records(text, "io")?;
    let mut nodes = NodeCollector::new(Tier::InterDomain, SourceTag::Io);
    let mut edges: Vec<(NodeId, NodeId, f64)> = Vec::new();
    for (index, rec) in records.iter().enumerate() {
        if !(0.0..=1.0).contains(&rec.weight) || !rec.weight.is_finite() {
            return Err(IngestError::WeightOutOfRange { index, weight: rec.weight });
        }
        let a = nodes.ensure(&rec.a.name, &rec.a.type_term, index)?;
        let b = nodes.ensure(&rec.b.name, &rec.b.type_term, index)?;
        if rec.weight >= cutoff {
            edges.push((a, b, rec.weight));
        }
    }
    let mut graph = nodes.graph;
    for (a, b, weight) in edges {
        if graph.has_edge_between(&a, &b, "correlates_with") {
            continue;
        }
        graph.add_edge(
            &a,
            &b,
            "correlates_with",
            Tier::InterDomain,
            Properties::from([("weight".to_string(), weight.into())]),
            Provenance::from([SourceTag::Io]),
        )?;
    }
    Ok(graph)
}

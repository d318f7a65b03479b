//! Graph persistence and export.
//!
//! The canonical on-disk form is a single JSON document; GraphML and DOT are
//! one-way exports for external tooling. Writers emit byte-identical output
//! for identical graphs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    Edge, EdgeId, GraphError, Node, NodeId, PropValue, Properties, PropertyGraph, Provenance,
    SourceTag, Tier,
};

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    directed: bool,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    name: String,
    #[serde(rename = "type")]
    type_term: String,
    tier: Tier,
    #[serde(default)]
    props: BTreeMap<String, Value>,
    #[serde(default)]
    prov: Vec<SourceTag>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    id: String,
    src: String,
    dst: String,
    rel: String,
    tier: Tier,
    #[serde(default)]
    props: BTreeMap<String, Value>,
    #[serde(default)]
    prov: Vec<SourceTag>,
}

pub(crate) fn props_from_json_map(raw: BTreeMap<String, Value>) -> Result<Properties, GraphError> {
    props_from_json(raw, "element")
}

pub(crate) fn props_to_json_map(props: &Properties) -> BTreeMap<String, Value> {
    props_to_json(props)
}

fn props_from_json(raw: BTreeMap<String, Value>, at: &str) -> Result<Properties, GraphError> {
    let mut props = Properties::new();
    for (key, value) in raw {
        let v = match value {
            Value::String(s) => PropValue::Text(s),
            Value::Bool(b) => PropValue::Bool(b),
            Value::Number(n) => {
                let f = n.as_f64().ok_or_else(|| {
                    GraphError::Format(format!("property {key} of {at}: unrepresentable number"))
                })?;
                PropValue::Number(f)
            }
            other => {
                return Err(GraphError::Format(format!(
                    "property {key} of {at}: expected scalar, got {other}"
                )))
            }
        };
        props.insert(key, v);
    }
    Ok(props)
}

fn props_to_json(props: &Properties) -> BTreeMap<String, Value> {
    props
        .iter()
        .map(|(k, v)| {
            let value = match v {
                PropValue::Text(s) => Value::String(s.clone()),
                PropValue::Bool(b) => Value::Bool(*b),
                PropValue::Number(n) => serde_json::Number::from_f64(*n)
                    .map(Value::Number)
                    .unwrap_or(Value::Null),
            };
            (k.clone(), value)
        })
        .collect()
}

/// Parses the canonical JSON graph document, validating all invariants.
pub fn graph_from_json(text: &str) -> Result<PropertyGraph, GraphError> {
    let doc: GraphDoc =
        serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))?;
    let mut g = if doc.directed { PropertyGraph::new_directed() } else { PropertyGraph::new() };
    for nd in doc.nodes {
        let props = props_from_json(nd.props, &format!("node {}", nd.id))?;
        g.insert_node(Node {
            id: NodeId::new(nd.id),
            name: nd.name,
            type_term: nd.type_term,
            tier: nd.tier,
            props,
            provenance: Provenance::from_iter(nd.prov),
        })?;
    }
    for ed in doc.edges {
        let props = props_from_json(ed.props, &format!("edge {}", ed.id))?;
        g.insert_edge(Edge {
            id: EdgeId::new(ed.id),
            src: NodeId::new(ed.src),
            dst: NodeId::new(ed.dst),
            relation: ed.rel,
            tier: ed.tier,
            props,
            provenance: Provenance::from_iter(ed.prov),
        })?;
    }
    Ok(g)
}

pub fn graph_to_json(g: &PropertyGraph) -> String {
    let doc = GraphDoc {
        directed: g.is_directed(),
        nodes: g
            .nodes()
            .iter()
            .map(|n| NodeDoc {
                id: n.id.to_string(),
                name: n.name.clone(),
                type_term: n.type_term.clone(),
                tier: n.tier,
                props: props_to_json(&n.props),
                prov: n.provenance.iter().copied().collect(),
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                id: e.id.to_string(),
                src: e.src.to_string(),
                dst: e.dst.to_string(),
                rel: e.relation.clone(),
                tier: e.tier,
                props: props_to_json(&e.props),
                prov: e.provenance.iter().copied().collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("graph serialization is infallible");
    out.push('\n');
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn to_graphml(g: &PropertyGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"name\" for=\"node\" attr.name=\"name\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"type\" for=\"node\" attr.name=\"type\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"tier\" for=\"node\" attr.name=\"tier\" attr.type=\"int\"/>\n");
    out.push_str("  <key id=\"rel\" for=\"edge\" attr.name=\"rel\" attr.type=\"string\"/>\n");
    let default = if g.is_directed() { "directed" } else { "undirected" };
    out.push_str(&format!("  <graph id=\"G\" edgedefault=\"{default}\">\n"));
    for n in g.nodes() {
        out.push_str(&format!("    <node id=\"{}\">\n", xml_escape(n.id.as_str())));
        out.push_str(&format!("      <data key=\"name\">{}</data>\n", xml_escape(&n.name)));
        out.push_str(&format!("      <data key=\"type\">{}</data>\n", xml_escape(&n.type_term)));
        out.push_str(&format!("      <data key=\"tier\">{}</data>\n", n.tier.level()));
        out.push_str("    </node>\n");
    }
    for e in g.edges() {
        out.push_str(&format!(
            "    <edge id=\"{}\" source=\"{}\" target=\"{}\">\n",
            xml_escape(e.id.as_str()),
            xml_escape(e.src.as_str()),
            xml_escape(e.dst.as_str())
        ));
        out.push_str(&format!("      <data key=\"rel\">{}</data>\n", xml_escape(&e.relation)));
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn tier_color(tier: Tier) -> &'static str {
    match tier {
        Tier::DomainInternal => "#a7c7e7",  // blue
        Tier::InterDomain => "#f4d35e",     // yellow
        Tier::SystemOfSystems => "#9bc995", // green
        Tier::Environment => "#e07a5f",     // red
    }
}

/// DOT rendering with node labels `name\ntype` and fill color keyed by tier.
/// An optional override map recolors individual nodes (used to highlight
/// template instances).
pub fn to_dot(g: &PropertyGraph, color_overrides: &BTreeMap<NodeId, String>) -> String {
    let mut out = String::new();
    let (kw, arrow) = if g.is_directed() { ("digraph", "->") } else { ("graph", "--") };
    out.push_str(&format!("{kw} g {{\n"));
    out.push_str("  node [style=filled];\n");
    for n in g.nodes() {
        let color = color_overrides
            .get(&n.id)
            .map(String::as_str)
            .unwrap_or_else(|| tier_color(n.tier));
        out.push_str(&format!(
            "  \"{}\" [label=\"{}\\n{}\", fillcolor=\"{}\"];\n",
            dot_escape(n.id.as_str()),
            dot_escape(&n.name),
            dot_escape(&n.type_term),
            color
        ));
    }
    for e in g.edges() {
        out.push_str(&format!(
            "  \"{}\" {} \"{}\" [label=\"{}\"];\n",
            dot_escape(e.src.as_str()),
            arrow,
            dot_escape(e.dst.as_str()),
            dot_escape(&e.relation)
        ));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PropertyGraph {
        let mut g = PropertyGraph::new();
        let a = g
            .add_node(
                "R1",
                "StorageRow",
                Tier::DomainInternal,
                Properties::from([("slots".to_string(), PropValue::Number(3.0))]),
                Provenance::from([SourceTag::Plc]),
            )
            .unwrap();
        let b = g
            .add_node("P1", "StoragePlace", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Position]))
            .unwrap();
        g.add_edge(&a, &b, "contains", Tier::DomainInternal, Properties::new(), Provenance::from([SourceTag::Plc]))
            .unwrap();
        g
    }

    #[test]
    fn json_round_trip_preserves_graph() {
        let g = sample();
        let text = graph_to_json(&g);
        let back = graph_from_json(&text).unwrap();
        assert_eq!(back.node_count(), 2);
        assert_eq!(back.edge_count(), 1);
        assert_eq!(graph_to_json(&back), text);
    }

    #[test]
    fn nested_property_values_rejected() {
        let text = r#"{"directed":false,"nodes":[{"id":"n0","name":"A","type":"X","tier":1,"props":{"bad":[1,2]},"prov":["plc"]}],"edges":[]}"#;
        let err = graph_from_json(text).unwrap_err();
        assert!(matches!(err, GraphError::Format(_)), "{err}");
    }

    #[test]
    fn dangling_edge_rejected_on_load() {
        let text = r#"{"directed":false,"nodes":[{"id":"n0","name":"A","type":"X","tier":1,"props":{},"prov":["plc"]}],"edges":[{"id":"e0","src":"n0","dst":"nope","rel":"r","tier":1,"props":{},"prov":["plc"]}]}"#;
        assert!(matches!(graph_from_json(text), Err(GraphError::DanglingEndpoint(_))));
    }

    #[test]
    fn graphml_mentions_declared_keys() {
        let text = to_graphml(&sample());
        for needle in ["attr.name=\"name\"", "attr.name=\"type\"", "attr.name=\"tier\"", "attr.name=\"rel\"", "StorageRow"] {
            assert!(text.contains(needle), "missing {needle} in {text}");
        }
    }

    #[test]
    fn dot_uses_tier_colors_and_labels() {
        let text = to_dot(&sample(), &BTreeMap::new());
        assert!(text.contains("R1\\nStorageRow"));
        assert!(text.contains(tier_color(Tier::DomainInternal)));
        assert!(text.contains("label=\"contains\""));
    }
}

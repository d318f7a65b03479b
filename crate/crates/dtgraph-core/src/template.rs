//! Template compression: promote high-value frequent patterns to reusable
//! definitions, carve their node-disjoint instances out of the graph, and
//! expand the result back.
//!
//! A carved instance leaves one instance record behind. Edges that crossed
//! the instance boundary are kept as boundary records annotated with the
//! pattern-node index (port) they attached to, so expansion can rebuild an
//! isomorphic graph: each instance becomes a fresh copy of its template's
//! pattern and boundary edges re-attach to the designated copy node. Editing
//! a template definition therefore propagates to every instance on expand.
//!
//! Instance selection is greedy over embeddings in sorted order; a maximum
//! disjoint set is not attempted.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    graph_from_json, graph_to_json, EdgeId, GraphError, NodeId, Properties, PropertyGraph,
    Provenance, Tier, TierSet,
};
use crate::miner::{
    embeddings_in_view, label_compatible, DataView, DfsCode, EdgeTuple, Embedding, MatchMode,
    MineError, Pattern, PatternGraph,
};
use crate::ontology::Taxonomy;

#[derive(Error, Debug)]
pub enum TemplateError {
    #[error("patterns do not fit this graph: {0}")]
    PatternMismatch(String),
    #[error("template structure: {0}")]
    Integrity(String),
    #[error("boundary edges {0} collide in the instance-node view; expand instead")]
    ViewCollision(String),
    #[error("template library document: {0}")]
    Format(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mine(#[from] MineError),
}

/// Tier and provenance captured from the first carved instance so expanded
/// copies stay valid tiered elements; labels alone do not carry that.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementMeta {
    pub tier: Tier,
    pub prov: Provenance,
}

/// A pattern promoted to a reusable definition with its chosen instances.
#[derive(Debug, Clone)]
pub struct Template {
    pub id: String,
    pub code: DfsCode,
    pub graph: PatternGraph,
    /// Pattern-node indices that carry boundary edges in any instance.
    pub ports: Vec<usize>,
    /// Original node ids of each carved instance, by pattern-node index.
    pub instances: Vec<Vec<NodeId>>,
    pub node_meta: Vec<ElementMeta>,
    pub edge_meta: Vec<ElementMeta>,
}

/// Where a boundary edge ends: an untouched node, or a port of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryEndpoint {
    Residual(NodeId),
    Instance { template: usize, instance: usize, port: usize },
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    pub a: BoundaryEndpoint,
    pub b: BoundaryEndpoint,
    pub relation: String,
    pub tier: Tier,
    pub props: Properties,
    pub prov: Provenance,
}

/// The compressed graph: untouched residual, template definitions, and the
/// boundary edges that reconnect everything on expand.
#[derive(Debug, Clone)]
pub struct TemplatizedGraph {
    pub residual: PropertyGraph,
    pub templates: Vec<Template>,
    pub boundary: Vec<BoundaryEdge>,
    pub original_nodes: usize,
    pub original_edges: usize,
}

#[derive(Debug, Clone)]
pub struct TemplatizeOptions {
    pub max_templates: usize,
    pub mode: MatchMode,
    pub tier_set: TierSet,
}

impl Default for TemplatizeOptions {
    fn default() -> Self {
        TemplatizeOptions { max_templates: 8, mode: MatchMode::Exact, tier_set: TierSet::lower() }
    }
}

/// Greedy maximal set of pairwise node-disjoint embeddings, taken in sorted
/// assignment order.
pub fn select_instances(embeddings: &[Embedding]) -> Vec<Embedding> {
    let mut sorted: Vec<&Embedding> = embeddings.iter().collect();
    sorted.sort();
    let mut taken: BTreeSet<NodeId> = BTreeSet::new();
    let mut chosen = Vec::new();
    for emb in sorted {
        if emb.assignment.iter().any(|id| taken.contains(id)) {
            continue;
        }
        taken.extend(emb.assignment.iter().cloned());
        chosen.push(emb.clone());
    }
    chosen
}

/// Estimated element reduction from promoting a pattern: pattern size times
/// replaceable instances beyond the definition itself.
pub fn score_pattern(pattern: &Pattern) -> usize {
    let disjoint = select_instances(&pattern.embeddings).len();
    (pattern.graph.node_count() + pattern.graph.edge_count()) * disjoint.saturating_sub(1)
}

struct Carver<'a> {
    abox: &'a PropertyGraph,
    alive: BTreeSet<NodeId>,
    /// node id -> (template, instance, port) once carved
    placements: BTreeMap<NodeId, (usize, usize, usize)>,
    consumed_edges: BTreeSet<EdgeId>,
    boundary: Vec<BoundaryEdge>,
    boundary_of_edge: BTreeMap<EdgeId, usize>,
}

impl<'a> Carver<'a> {
    fn new(abox: &'a PropertyGraph) -> Carver<'a> {
        Carver {
            abox,
            alive: abox.nodes().iter().map(|n| n.id.clone()).collect(),
            placements: BTreeMap::new(),
            consumed_edges: BTreeSet::new(),
            boundary: Vec::new(),
            boundary_of_edge: BTreeMap::new(),
        }
    }

    fn pattern_edge_image(&self, emb: &Embedding, a: usize, b: usize, rel: &str) -> Option<EdgeId> {
        let (na, nb) = (&emb.assignment[a], &emb.assignment[b]);
        let pos = self.abox.node_pos(na)?;
        for &eidx in self.abox.incident_at(pos) {
            let edge = &self.abox.edges()[eidx];
            let matches = edge.relation == rel
                && ((edge.src == *na && edge.dst == *nb) || (edge.src == *nb && edge.dst == *na));
            if matches {
                return Some(edge.id.clone());
            }
        }
        None
    }

    fn carve_instance(
        &mut self,
        template_idx: usize,
        instance_idx: usize,
        pattern: &PatternGraph,
        emb: &Embedding,
        edge_meta: &mut Vec<ElementMeta>,
    ) -> Result<(), TemplateError> {
        // consume the pattern-edge images first
        for (eidx, (a, b, rel)) in pattern.edges().iter().enumerate() {
            let id = self.pattern_edge_image(emb, *a, *b, rel).ok_or_else(|| {
                TemplateError::PatternMismatch(format!(
                    "no {rel} edge between {} and {}",
                    emb.assignment[*a], emb.assignment[*b]
                ))
            })?;
            let edge = self.abox.edge(&id).expect("image edge exists");
            if edge_meta.len() == eidx {
                edge_meta.push(ElementMeta { tier: edge.tier, prov: edge.provenance.clone() });
            }
            self.consumed_edges.insert(id);
        }

        let in_instance: BTreeMap<&NodeId, usize> =
            emb.assignment.iter().enumerate().map(|(port, id)| (id, port)).collect();

        // remaining incident edges become (or update) boundary records
        for (port, id) in emb.assignment.iter().enumerate() {
            let pos = self.abox.node_pos(id).ok_or_else(|| {
                TemplateError::PatternMismatch(format!("embedding names unknown node {id}"))
            })?;
            for &eidx in self.abox.incident_at(pos) {
                let edge = &self.abox.edges()[eidx];
                if self.consumed_edges.contains(&edge.id) {
                    continue;
                }
                let this_end = BoundaryEndpoint::Instance {
                    template: template_idx,
                    instance: instance_idx,
                    port,
                };
                if let Some(&bidx) = self.boundary_of_edge.get(&edge.id) {
                    // the other endpoint was carved earlier; patch this side
                    let record = &mut self.boundary[bidx];
                    if record.a == BoundaryEndpoint::Residual(id.clone()) {
                        record.a = this_end;
                    } else if record.b == BoundaryEndpoint::Residual(id.clone()) {
                        record.b = this_end;
                    }
                    continue;
                }
                let classify = |endpoint: &NodeId| -> BoundaryEndpoint {
                    if endpoint == id {
                        this_end.clone()
                    } else if let Some(&(t, k, p)) = self.placements.get(endpoint) {
                        BoundaryEndpoint::Instance { template: t, instance: k, port: p }
                    } else if let Some(&p) = in_instance.get(endpoint) {
                        BoundaryEndpoint::Instance { template: template_idx, instance: instance_idx, port: p }
                    } else {
                        BoundaryEndpoint::Residual(endpoint.clone())
                    }
                };
                let record = BoundaryEdge {
                    a: classify(&edge.src),
                    b: classify(&edge.dst),
                    relation: edge.relation.clone(),
                    tier: edge.tier,
                    props: edge.props.clone(),
                    prov: edge.provenance.clone(),
                };
                self.boundary_of_edge.insert(edge.id.clone(), self.boundary.len());
                self.boundary.push(record);
            }
        }

        for (port, id) in emb.assignment.iter().enumerate() {
            self.alive.remove(id);
            self.placements.insert(id.clone(), (template_idx, instance_idx, port));
        }
        Ok(())
    }
}

/// Rewrites the graph by repeatedly promoting the best-scoring pattern and
/// carving its disjoint instances, until nothing scores above zero or
/// `max_templates` is reached. Scores are recomputed against the shrinking
/// residual each round.
pub fn templatize(
    abox: &PropertyGraph,
    patterns: &[Pattern],
    opts: &TemplatizeOptions,
    taxonomy: &Taxonomy,
) -> Result<TemplatizedGraph, TemplateError> {
    // reject pattern sets that do not speak about this graph
    for p in patterns {
        for emb in &p.embeddings {
            for (idx, id) in emb.assignment.iter().enumerate() {
                let node = abox.node(id).ok_or_else(|| {
                    TemplateError::PatternMismatch(format!("embedding names unknown node {id}"))
                })?;
                if !label_compatible(&node.type_term, &p.graph.labels()[idx], opts.mode, taxonomy) {
                    return Err(TemplateError::PatternMismatch(format!(
                        "node {id} of type {} cannot carry pattern label {}",
                        node.type_term,
                        p.graph.labels()[idx]
                    )));
                }
            }
        }
    }

    let mut carver = Carver::new(abox);
    let mut templates: Vec<Template> = Vec::new();
    let mut dead = vec![false; patterns.len()];

    while templates.len() < opts.max_templates {
        let view = DataView::filtered(abox, &opts.tier_set, Some(&carver.alive));
        let mut best: Option<(usize, usize, Vec<Embedding>)> = None; // (score, pattern idx, chosen)
        for (pi, p) in patterns.iter().enumerate() {
            if dead[pi] {
                continue;
            }
            let embs = embeddings_in_view(&p.graph, &view, opts.mode, taxonomy);
            let chosen = select_instances(&embs);
            let score =
                (p.graph.node_count() + p.graph.edge_count()) * chosen.len().saturating_sub(1);
            if score == 0 {
                // the residual only shrinks, so this pattern is spent
                dead[pi] = true;
                continue;
            }
            let better = match &best {
                None => true,
                Some((s, bi, _)) => {
                    score > *s
                        || (score == *s
                            && patterns[pi].code.cmp_code(&patterns[*bi].code) == std::cmp::Ordering::Less)
                }
            };
            if better {
                best = Some((score, pi, chosen));
            }
        }
        let Some((_, pi, chosen)) = best else { break };
        let pattern = &patterns[pi];
        let template_idx = templates.len();
        let mut node_meta: Vec<ElementMeta> = Vec::new();
        let mut edge_meta: Vec<ElementMeta> = Vec::new();
        let mut instance_ids = Vec::with_capacity(chosen.len());
        for (k, emb) in chosen.iter().enumerate() {
            if node_meta.is_empty() {
                for id in &emb.assignment {
                    let node = abox.node(id).expect("validated above");
                    node_meta.push(ElementMeta { tier: node.tier, prov: node.provenance.clone() });
                }
            }
            carver.carve_instance(template_idx, k, &pattern.graph, emb, &mut edge_meta)?;
            instance_ids.push(emb.assignment.clone());
        }
        templates.push(Template {
            id: format!("T{template_idx}"),
            code: pattern.code.clone(),
            graph: pattern.graph.clone(),
            ports: Vec::new(), // filled below from boundary records
            instances: instance_ids,
            node_meta,
            edge_meta,
        });
    }

    // residual: untouched nodes plus edges with both endpoints untouched
    let mut residual = if abox.is_directed() { PropertyGraph::new_directed() } else { PropertyGraph::new() };
    for node in abox.nodes() {
        if carver.alive.contains(&node.id) {
            residual.insert_node(node.clone())?;
        }
    }
    for edge in abox.edges() {
        if carver.alive.contains(&edge.src) && carver.alive.contains(&edge.dst) {
            residual.insert_edge(edge.clone())?;
        }
    }

    // ports per template
    let mut ports: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for record in &carver.boundary {
        for endpoint in [&record.a, &record.b] {
            if let BoundaryEndpoint::Instance { template, port, .. } = endpoint {
                ports.entry(*template).or_default().insert(*port);
            }
        }
    }
    for (t, template) in templates.iter_mut().enumerate() {
        template.ports = ports.get(&t).map(|s| s.iter().copied().collect()).unwrap_or_default();
    }

    Ok(TemplatizedGraph {
        residual,
        templates,
        boundary: carver.boundary,
        original_nodes: abox.node_count(),
        original_edges: abox.edge_count(),
    })
}

/// Rebuilds a full graph: residual elements keep their identity, every
/// instance becomes a fresh copy of its template's pattern, and boundary
/// edges re-attach to the designated copy nodes. The result is isomorphic to
/// the graph that was templatized.
pub fn expand(tg: &TemplatizedGraph) -> Result<PropertyGraph, TemplateError> {
    expand_detailed(tg).map(|(g, _)| g)
}

/// Which (template index, instance index) an expanded node came from.
pub type InstanceOrigin = BTreeMap<NodeId, (usize, usize)>;

/// Like [`expand`] but also reports which (template, instance) pair each
/// fresh node came from, for instance-aware rendering.
pub fn expand_detailed(
    tg: &TemplatizedGraph,
) -> Result<(PropertyGraph, InstanceOrigin), TemplateError> {
    let mut g = tg.residual.clone();
    let mut fresh: BTreeMap<(usize, usize, usize), NodeId> = BTreeMap::new();
    let mut origin: BTreeMap<NodeId, (usize, usize)> = BTreeMap::new();
    for (t, template) in tg.templates.iter().enumerate() {
        let n = template.graph.node_count();
        if template.node_meta.len() != n || template.edge_meta.len() != template.graph.edge_count() {
            return Err(TemplateError::Integrity(format!(
                "template {} metadata does not match its pattern",
                template.id
            )));
        }
        for (k, original) in template.instances.iter().enumerate() {
            if original.len() != n {
                return Err(TemplateError::Integrity(format!(
                    "template {} instance {k} has {} nodes, pattern has {n}",
                    template.id,
                    original.len()
                )));
            }
            for (idx, label) in template.graph.labels().iter().enumerate() {
                let meta = &template.node_meta[idx];
                let id = g.add_node(
                    format!("{}#{k}.{idx}", template.id),
                    label,
                    meta.tier,
                    Properties::new(),
                    meta.prov.clone(),
                )?;
                fresh.insert((t, k, idx), id.clone());
                origin.insert(id, (t, k));
            }
            for (eidx, (a, b, rel)) in template.graph.edges().iter().enumerate() {
                let meta = &template.edge_meta[eidx];
                g.add_edge(
                    &fresh[&(t, k, *a)],
                    &fresh[&(t, k, *b)],
                    rel,
                    meta.tier,
                    Properties::new(),
                    meta.prov.clone(),
                )?;
            }
        }
    }
    for record in &tg.boundary {
        let resolve = |endpoint: &BoundaryEndpoint| -> Result<NodeId, TemplateError> {
            match endpoint {
                BoundaryEndpoint::Residual(id) => {
                    if g.contains_node(id) {
                        Ok(id.clone())
                    } else {
                        Err(TemplateError::Integrity(format!("boundary edge names unknown node {id}")))
                    }
                }
                BoundaryEndpoint::Instance { template, instance, port } => fresh
                    .get(&(*template, *instance, *port))
                    .cloned()
                    .ok_or_else(|| {
                        TemplateError::Integrity(format!(
                            "boundary edge names template {template} instance {instance} port {port}, which does not exist"
                        ))
                    }),
            }
        };
        let a = resolve(&record.a)?;
        let b = resolve(&record.b)?;
        g.add_edge(&a, &b, &record.relation, record.tier, record.props.clone(), record.prov.clone())?;
    }
    Ok((g, origin))
}

/// Renders the compressed graph as a plain property graph: one node per
/// instance typed by its template id, boundary edges annotated with
/// `src_port`/`dst_port` properties. This is the input for a further mining
/// round over instance nodes. Fails when two boundary edges would collapse
/// onto the same (endpoints, relation) triple.
pub fn view_graph(tg: &TemplatizedGraph) -> Result<PropertyGraph, TemplateError> {
    let mut g = tg.residual.clone();
    let mut instance_node: BTreeMap<(usize, usize), NodeId> = BTreeMap::new();
    for (t, template) in tg.templates.iter().enumerate() {
        for (k, _) in template.instances.iter().enumerate() {
            let tier = template.node_meta.iter().map(|m| m.tier).min().unwrap_or(Tier::DomainInternal);
            let prov: Provenance =
                template.node_meta.iter().flat_map(|m| m.prov.iter().copied()).collect();
            let id = g.add_node(format!("{}#{k}", template.id), &template.id, tier, Properties::new(), prov)?;
            instance_node.insert((t, k), id);
        }
    }
    for record in &tg.boundary {
        let mut props = record.props.clone();
        let resolve = |endpoint: &BoundaryEndpoint, key: &str, props: &mut Properties| -> NodeId {
            match endpoint {
                BoundaryEndpoint::Residual(id) => id.clone(),
                BoundaryEndpoint::Instance { template, instance, port } => {
                    props.insert(key.to_string(), (*port as f64).into());
                    instance_node[&(*template, *instance)].clone()
                }
            }
        };
        let a = resolve(&record.a, "src_port", &mut props);
        let b = resolve(&record.b, "dst_port", &mut props);
        g.add_edge(&a, &b, &record.relation, record.tier, props, record.prov.clone())
            .map_err(|e| match e {
                GraphError::DuplicateEdge { src, dst, relation } => {
                    TemplateError::ViewCollision(format!("{src} -[{relation}]- {dst}"))
                }
                other => TemplateError::Graph(other),
            })?;
    }
    Ok(g)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompressionStats {
    pub nodes_before: usize,
    pub edges_before: usize,
    pub residual_nodes: usize,
    pub residual_edges: usize,
    pub instance_nodes: usize,
    pub boundary_edges: usize,
    pub template_count: usize,
    pub template_definition_elements: usize,
    pub elements_before: usize,
    pub elements_after: usize,
    pub reduction_ratio: f64,
}

pub fn reduction_ratio(elements_before: usize, elements_after: usize) -> f64 {
    if elements_before == 0 {
        return 0.0;
    }
    1.0 - (elements_after as f64 / elements_before as f64)
}

/// Element accounting before and after templatizing. Template definitions
/// count once each; instances count one node; boundary edges keep their
/// count.
pub fn compression_stats(tg: &TemplatizedGraph) -> CompressionStats {
    let instance_nodes: usize = tg.templates.iter().map(|t| t.instances.len()).sum();
    let template_definition_elements: usize = tg
        .templates
        .iter()
        .map(|t| t.graph.node_count() + t.graph.edge_count())
        .sum();
    let elements_before = tg.original_nodes + tg.original_edges;
    let elements_after = tg.residual.node_count()
        + tg.residual.edge_count()
        + instance_nodes
        + tg.boundary.len()
        + template_definition_elements;
    CompressionStats {
        nodes_before: tg.original_nodes,
        edges_before: tg.original_edges,
        residual_nodes: tg.residual.node_count(),
        residual_edges: tg.residual.edge_count(),
        instance_nodes,
        boundary_edges: tg.boundary.len(),
        template_count: tg.templates.len(),
        template_definition_elements,
        elements_before,
        elements_after,
        reduction_ratio: reduction_ratio(elements_before, elements_after),
    }
}

// --- persistence ------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TemplateDoc {
    id: String,
    code: Vec<EdgeTuple>,
    ports: Vec<usize>,
    instances: Vec<Vec<NodeId>>,
    node_meta: Vec<ElementMeta>,
    edge_meta: Vec<ElementMeta>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EndpointDoc {
    Residual { node: NodeId },
    Instance { instance: (usize, usize), port: usize },
}

#[derive(Serialize, Deserialize)]
struct BoundaryDoc {
    a: EndpointDoc,
    b: EndpointDoc,
    rel: String,
    tier: Tier,
    #[serde(default)]
    props: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    prov: Vec<crate::graph::SourceTag>,
}

#[derive(Serialize, Deserialize)]
struct LibraryDoc {
    templates: Vec<TemplateDoc>,
    boundary: Vec<BoundaryDoc>,
    residual: serde_json::Value,
    original: OriginalCounts,
}

#[derive(Serialize, Deserialize)]
struct OriginalCounts {
    nodes: usize,
    edges: usize,
}

fn endpoint_to_doc(e: &BoundaryEndpoint) -> EndpointDoc {
    match e {
        BoundaryEndpoint::Residual(id) => EndpointDoc::Residual { node: id.clone() },
        BoundaryEndpoint::Instance { template, instance, port } => {
            EndpointDoc::Instance { instance: (*template, *instance), port: *port }
        }
    }
}

fn endpoint_from_doc(e: EndpointDoc) -> BoundaryEndpoint {
    match e {
        EndpointDoc::Residual { node } => BoundaryEndpoint::Residual(node),
        EndpointDoc::Instance { instance: (t, k), port } => {
            BoundaryEndpoint::Instance { template: t, instance: k, port }
        }
    }
}

pub fn library_to_json(tg: &TemplatizedGraph) -> String {
    let doc = LibraryDoc {
        templates: tg
            .templates
            .iter()
            .map(|t| TemplateDoc {
                id: t.id.clone(),
                code: t.code.tuples().to_vec(),
                ports: t.ports.clone(),
                instances: t.instances.clone(),
                node_meta: t.node_meta.clone(),
                edge_meta: t.edge_meta.clone(),
            })
            .collect(),
        boundary: tg
            .boundary
            .iter()
            .map(|b| BoundaryDoc {
                a: endpoint_to_doc(&b.a),
                b: endpoint_to_doc(&b.b),
                rel: b.relation.clone(),
                tier: b.tier,
                props: crate::graph::props_to_json_map(&b.props),
                prov: b.prov.iter().copied().collect(),
            })
            .collect(),
        residual: serde_json::from_str(&graph_to_json(&tg.residual)).expect("graph json is valid"),
        original: OriginalCounts { nodes: tg.original_nodes, edges: tg.original_edges },
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("library serialization is infallible");
    out.push('\n');
    out
}

pub fn library_from_json(text: &str) -> Result<TemplatizedGraph, TemplateError> {
    let doc: LibraryDoc =
        serde_json::from_str(text).map_err(|e| TemplateError::Format(e.to_string()))?;
    let residual = graph_from_json(&doc.residual.to_string())?;
    let templates = doc
        .templates
        .into_iter()
        .map(|t| -> Result<Template, TemplateError> {
            let code = DfsCode::new(t.code)?;
            let graph = code.to_graph()?;
            if t.node_meta.len() != graph.node_count() || t.edge_meta.len() != graph.edge_count() {
                return Err(TemplateError::Integrity(format!(
                    "template {} metadata does not match its pattern",
                    t.id
                )));
            }
            Ok(Template {
                id: t.id,
                code,
                graph,
                ports: t.ports,
                instances: t.instances,
                node_meta: t.node_meta,
                edge_meta: t.edge_meta,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let boundary = doc
        .boundary
        .into_iter()
        .map(|b| -> Result<BoundaryEdge, TemplateError> {
            Ok(BoundaryEdge {
                a: endpoint_from_doc(b.a),
                b: endpoint_from_doc(b.b),
                relation: b.rel,
                tier: b.tier,
                props: crate::graph::props_from_json_map(b.props)
                    .map_err(|e| TemplateError::Format(e.to_string()))?,
                prov: b.prov.into_iter().collect(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TemplatizedGraph {
        residual,
        templates,
        boundary,
        original_nodes: doc.original.nodes,
        original_edges: doc.original.edges,
    })
}

/// DOT rendering of the expanded graph with every instance filled in its own
/// color; residual nodes keep tier colors.
pub fn to_dot_colored(tg: &TemplatizedGraph) -> Result<String, TemplateError> {
    let (expanded, origin) = expand_detailed(tg)?;
    let mut overrides: BTreeMap<NodeId, String> = BTreeMap::new();
    // stable global instance numbering: template-major, instance-minor
    let mut numbering: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, template) in tg.templates.iter().enumerate() {
        for k in 0..template.instances.len() {
            let n = numbering.len();
            numbering.insert((t, k), n);
        }
    }
    for (id, key) in &origin {
        overrides.insert(id.clone(), instance_color(numbering[key]));
    }
    Ok(crate::graph::to_dot(&expanded, &overrides))
}

/// Distinct fill color per instance index: hue stepped by the golden angle.
pub fn instance_color(index: usize) -> String {
    let hue = (index as f64 * 137.508) % 360.0;
    let (h, s, v) = (hue / 60.0, 0.55, 0.88);
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    format!(
        "#{:02x}{:02x}{:02x}",
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::miner::{mine_frequent, MiningParams};

    fn mine_warehouse() -> (PropertyGraph, Vec<Pattern>) {
        let g = fixtures::warehouse();
        let params = MiningParams { min_support: 4, ..Default::default() };
        let patterns = mine_frequent(&g, &params, &fixtures::taxonomy()).unwrap();
        (g, patterns)
    }

    #[test]
    fn score_formula() {
        let (_, patterns) = mine_warehouse();
        let row = patterns
            .iter()
            .find(|p| p.graph.node_count() == 4 && p.graph.edge_count() == 5)
            .unwrap();
        // 4 nodes + 5 edges, 4 disjoint instances
        assert_eq!(score_pattern(row), 9 * 3);
    }

    #[test]
    fn score_zero_for_single_instance() {
        let (_, patterns) = mine_warehouse();
        let mut p = patterns[0].clone();
        p.embeddings.truncate(1);
        assert_eq!(score_pattern(&p), 0);
        p.embeddings.clear();
        assert_eq!(score_pattern(&p), 0);
    }

    #[test]
    fn select_instances_cases() {
        assert!(select_instances(&[]).is_empty());
        let (_, patterns) = mine_warehouse();
        let row = patterns
            .iter()
            .find(|p| p.graph.node_count() == 4 && p.graph.edge_count() == 5)
            .unwrap();
        let chosen = select_instances(&row.embeddings);
        assert_eq!(chosen.len(), 4);
        // overlapping embeddings: first in sort order wins
        let a = Embedding { assignment: vec![NodeId::new("x"), NodeId::new("y")] };
        let b = Embedding { assignment: vec![NodeId::new("y"), NodeId::new("z")] };
        let chosen = select_instances(&[b.clone(), a.clone()]);
        assert_eq!(chosen, vec![a]);
    }

    #[test]
    fn templatize_warehouse_single_row_template() {
        let (g, patterns) = mine_warehouse();
        let tg = templatize(&g, &patterns, &TemplatizeOptions::default(), &fixtures::taxonomy()).unwrap();
        assert_eq!(tg.templates.len(), 1);
        assert_eq!(tg.templates[0].instances.len(), 4);
        // instances are node-disjoint
        let mut seen = BTreeSet::new();
        for inst in &tg.templates[0].instances {
            for id in inst {
                assert!(seen.insert(id.clone()), "node {id} in two instances");
            }
        }
        // replacing 4 instances of a 4-node pattern leaves 4 instance records:
        // node count drops by 4 * (4 - 1)
        let stats = compression_stats(&tg);
        assert_eq!(stats.residual_nodes + stats.instance_nodes, g.node_count() - 4 * 3);
    }

    #[test]
    fn templatize_without_patterns_is_identity() {
        let g = fixtures::warehouse();
        let tg = templatize(&g, &[], &TemplatizeOptions::default(), &fixtures::taxonomy()).unwrap();
        assert!(tg.templates.is_empty());
        assert_eq!(tg.residual.node_count(), g.node_count());
        assert_eq!(tg.residual.edge_count(), g.edge_count());
        let stats = compression_stats(&tg);
        assert_eq!(stats.reduction_ratio, 0.0);
    }

    #[test]
    fn round_trip_is_lossless() {
        let (g, patterns) = mine_warehouse();
        let tg = templatize(&g, &patterns, &TemplatizeOptions::default(), &fixtures::taxonomy()).unwrap();
        let back = expand(&tg).unwrap();
        assert_eq!(back.node_count(), g.node_count());
        assert_eq!(back.edge_count(), g.edge_count());
        assert_eq!(
            back.canonical_signature().unwrap(),
            g.canonical_signature().unwrap()
        );
    }

    #[test]
    fn patterns_from_another_graph_rejected() {
        let (_, patterns) = mine_warehouse();
        let other = fixtures::taxonomy(); // any different graph
        let _ = other;
        let mut unrelated = PropertyGraph::new();
        unrelated
            .add_node("lonely", "Conveyor", Tier::DomainInternal, Properties::new(), Provenance::new())
            .unwrap();
        let err = templatize(&unrelated, &patterns, &TemplatizeOptions::default(), &fixtures::taxonomy());
        assert!(matches!(err, Err(TemplateError::PatternMismatch(_))));
    }

    #[test]
    fn corrupt_port_is_an_integrity_error() {
        let (g, patterns) = mine_warehouse();
        let mut tg = templatize(&g, &patterns, &TemplatizeOptions::default(), &fixtures::taxonomy()).unwrap();
        if let Some(record) = tg.boundary.first_mut() {
            if let BoundaryEndpoint::Instance { port, .. } = &mut record.a {
                *port = 99;
            } else if let BoundaryEndpoint::Instance { port, .. } = &mut record.b {
                *port = 99;
            }
        }
        assert!(matches!(expand(&tg), Err(TemplateError::Integrity(_))));
    }

    #[test]
    fn library_json_round_trip() {
        let (g, patterns) = mine_warehouse();
        let tg = templatize(&g, &patterns, &TemplatizeOptions::default(), &fixtures::taxonomy()).unwrap();
        let text = library_to_json(&tg);
        let back = library_from_json(&text).unwrap();
        assert_eq!(library_to_json(&back), text);
        let expanded = expand(&back).unwrap();
        assert_eq!(
            expanded.canonical_signature().unwrap(),
            g.canonical_signature().unwrap()
        );
    }

    #[test]
    fn ratio_arithmetic() {
        assert_eq!(reduction_ratio(100, 60), 0.4);
        assert_eq!(reduction_ratio(10, 10), 0.0);
        assert_eq!(reduction_ratio(0, 0), 0.0);
    }

    #[test]
    fn warehouse_stats_match_hand_count() {
        // warehouse: 18 nodes + 25 edges = 43 elements. carving 4 row
        // instances (4 nodes / 5 edges each) leaves the hub and the system
        // node, their connecting edge, 4 instance records, the 4 hub-to-row
        // boundary edges and one 9-element template definition.
        let (g, patterns) = mine_warehouse();
        let tg = templatize(&g, &patterns, &TemplatizeOptions::default(), &fixtures::taxonomy()).unwrap();
        let stats = compression_stats(&tg);
        assert_eq!(stats.nodes_before, 18);
        assert_eq!(stats.edges_before, 25);
        assert_eq!(stats.residual_nodes, 2);
        assert_eq!(stats.residual_edges, 1);
        assert_eq!(stats.instance_nodes, 4);
        assert_eq!(stats.boundary_edges, 4);
        assert_eq!(stats.template_definition_elements, 9);
        assert_eq!(stats.elements_after, 20);
        assert!((stats.reduction_ratio - (1.0 - 20.0 / 43.0)).abs() < 1e-12);
    }

    #[test]
    fn colored_dot_gives_each_instance_its_own_color() {
        let (g, patterns) = mine_warehouse();
        let tg = templatize(&g, &patterns, &TemplatizeOptions::default(), &fixtures::taxonomy()).unwrap();
        let dot = to_dot_colored(&tg).unwrap();
        let colors: BTreeSet<String> =
            (0..4).map(instance_color).collect();
        assert_eq!(colors.len(), 4);
        for color in &colors {
            assert!(dot.contains(color.as_str()), "missing {color}");
        }
        let _ = g;
    }

    #[test]
    fn hierarchical_round_composes_instances() {
        let g = fixtures::two_warehouses();
        let tax = fixtures::taxonomy();
        let params = MiningParams { min_support: 8, ..Default::default() };
        let patterns = mine_frequent(&g, &params, &tax).unwrap();
        let tg1 = templatize(&g, &patterns, &TemplatizeOptions::default(), &tax).unwrap();
        assert_eq!(tg1.templates.len(), 1);
        assert_eq!(tg1.templates[0].instances.len(), 8);

        // second round over instance nodes
        let v1 = view_graph(&tg1).unwrap();
        let params2 = MiningParams { min_support: 2, ..Default::default() };
        let patterns2 = mine_frequent(&v1, &params2, &tax).unwrap();
        let tg2 = templatize(&v1, &patterns2, &TemplatizeOptions::default(), &tax).unwrap();
        assert!(!tg2.templates.is_empty());
        // the composed template groups one hub with its four row instances
        let composed = &tg2.templates[0];
        assert!(composed.graph.labels().iter().filter(|l| l.as_str() == "T0").count() >= 4);
        assert_eq!(composed.instances.len(), 2);

        // each level expands back losslessly
        let back2 = expand(&tg2).unwrap();
        assert_eq!(back2.canonical_signature().unwrap(), v1.canonical_signature().unwrap());
        let back1 = expand(&tg1).unwrap();
        assert_eq!(back1.canonical_signature().unwrap(), g.canonical_signature().unwrap());
    }
}

//! Deterministic fixture graphs and record files for tests, the acceptance
//! suite and benchmarks.
//!
//! Everything here is reproducible: the only randomness is a seeded SplitMix
//! generator, so fixture bytes never drift between runs or machines.

use crate::graph::{Properties, PropertyGraph, Provenance, SourceTag, Tier};
use crate::ontology::Taxonomy;

/// SplitMix64; deterministic and good enough for fixture shuffling.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        self.next_u64() % n
    }
}

pub const TAXONOMY_JSON: &str = r#"{
  "types": [
    {"name": "Component", "parent": "Thing"},
    {"name": "StorageRow", "parent": "Component"},
    {"name": "StoragePlace", "parent": "Component", "aliases": ["LagerPlatz"]},
    {"name": "Conveyor", "parent": "Component"},
    {"name": "Drive", "parent": "Component"}
  ]
}
"#;

/// The shared test taxonomy: Component with four concrete kinds plus one
/// German-vocabulary alias.
pub fn taxonomy() -> Taxonomy {
    Taxonomy::load(TAXONOMY_JSON).expect("fixture taxonomy is valid")
}

fn prov(tag: SourceTag) -> Provenance {
    Provenance::from([tag])
}

fn add_row(g: &mut PropertyGraph, row: usize, hub: Option<&crate::graph::NodeId>) {
    let sr = g
        .add_node(format!("Row_{row}"), "StorageRow", Tier::DomainInternal, Properties::new(), prov(SourceTag::Plc))
        .unwrap();
    let mut places = Vec::new();
    for p in 1..=3 {
        let id = g
            .add_node(
                format!("Place_{row}_{p}"),
                "StoragePlace",
                Tier::DomainInternal,
                Properties::new(),
                prov(SourceTag::Plc),
            )
            .unwrap();
        g.add_edge(&sr, &id, "contains", Tier::DomainInternal, Properties::new(), prov(SourceTag::Plc))
            .unwrap();
        places.push(id);
    }
    for w in places.windows(2) {
        g.add_edge(&w[0], &w[1], "arranged_next_to", Tier::DomainInternal, Properties::new(), prov(SourceTag::Position))
            .unwrap();
    }
    if let Some(hub) = hub {
        g.add_edge(hub, &sr, "contains", Tier::InterDomain, Properties::new(), prov(SourceTag::Plc))
            .unwrap();
    }
}

/// Warehouse slice: one hub holding four structurally identical storage rows
/// (a row is one StorageRow with three chained StoragePlaces), plus one
/// upper-tier system node that tier projection is expected to drop.
pub fn warehouse() -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let hub = g
        .add_node("Warehouse", "Warehouse", Tier::InterDomain, Properties::new(), prov(SourceTag::Plc))
        .unwrap();
    for row in 1..=4 {
        add_row(&mut g, row, Some(&hub));
    }
    let cell = g
        .add_node("Cell_1", "Cell", Tier::SystemOfSystems, Properties::new(), prov(SourceTag::Plc))
        .unwrap();
    g.add_edge(&hub, &cell, "part_of", Tier::SystemOfSystems, Properties::new(), prov(SourceTag::Plc))
        .unwrap();
    g
}

/// Two connected warehouse hubs with four rows each; a second mining round
/// over the row instances can fold each hub-plus-rows group into one
/// composite template.
pub fn two_warehouses() -> PropertyGraph {
    let mut g = PropertyGraph::new();
    let w1 = g
        .add_node("Warehouse_A", "Warehouse", Tier::InterDomain, Properties::new(), prov(SourceTag::Plc))
        .unwrap();
    let w2 = g
        .add_node("Warehouse_B", "Warehouse", Tier::InterDomain, Properties::new(), prov(SourceTag::Plc))
        .unwrap();
    g.add_edge(&w1, &w2, "arranged_next_to", Tier::InterDomain, Properties::new(), prov(SourceTag::Position))
        .unwrap();
    for row in 1..=4 {
        add_row(&mut g, row, Some(&w1));
    }
    for row in 5..=8 {
        add_row(&mut g, row, Some(&w2));
    }
    g
}

/// JSON record files that merge into the warehouse slice through the full
/// ingest pipeline.
pub fn warehouse_plc_json() -> String {
    let mut records = Vec::new();
    for row in 1..=4 {
        records.push(format!(
            r#"{{"subject":{{"name":"Warehouse","type":"Warehouse"}},"relation":"contains","object":{{"name":"Row_{row}","type":"StorageRow"}}}}"#
        ));
        for p in 1..=3 {
            records.push(format!(
                r#"{{"subject":{{"name":"Row_{row}","type":"StorageRow"}},"relation":"contains","object":{{"name":"Place_{row}_{p}","type":"StoragePlace"}}}}"#
            ));
        }
    }
    format!("{{\"source\":\"plc\",\"records\":[\n{}\n]}}\n", records.join(",\n"))
}

pub fn warehouse_position_json() -> String {
    let mut records = Vec::new();
    for row in 1..=4 {
        for p in 1..=3 {
            let x = (p - 1) as f64;
            let y = 10.0 * row as f64;
            records.push(format!(
                r#"{{"name":"Place_{row}_{p}","type":"LagerPlatz","pos":[{x:.1},{y:.1},0.0]}}"#
            ));
        }
    }
    format!("{{\"source\":\"position\",\"records\":[\n{}\n]}}\n", records.join(",\n"))
}

pub fn warehouse_io_json() -> String {
    let mut records = Vec::new();
    for row in 1..=4 {
        records.push(format!(
            r#"{{"a":{{"name":"Warehouse","type":"Warehouse"}},"b":{{"name":"Row_{row}","type":"StorageRow"}},"weight":0.9{row}}}"#
        ));
    }
    format!("{{\"source\":\"io\",\"records\":[\n{}\n]}}\n", records.join(",\n"))
}

struct PlantBuilder {
    plc: PropertyGraph,
    position: PropertyGraph,
    io: PropertyGraph,
    nodes: std::collections::BTreeMap<String, (String, Tier)>,
}

impl PlantBuilder {
    fn new() -> PlantBuilder {
        PlantBuilder {
            plc: PropertyGraph::new(),
            position: PropertyGraph::new(),
            io: PropertyGraph::new(),
            nodes: std::collections::BTreeMap::new(),
        }
    }

    fn declare(&mut self, name: &str, type_term: &str, tier: Tier) {
        self.nodes.insert(name.to_string(), (type_term.to_string(), tier));
    }

    fn part_of(&mut self, source: SourceTag) -> &mut PropertyGraph {
        match source {
            SourceTag::Plc => &mut self.plc,
            SourceTag::Position => &mut self.position,
            SourceTag::Io => &mut self.io,
        }
    }

    fn edge(&mut self, source: SourceTag, a: &str, b: &str, rel: &str, tier: Tier) {
        for name in [a, b] {
            let (ty, node_tier) = self.nodes[name].clone();
            let part = self.part_of(source);
            if part.nodes().iter().all(|n| n.name != name) {
                let mut node_prov = Provenance::new();
                node_prov.insert(source);
                part.add_node(name, ty, node_tier, Properties::new(), node_prov).unwrap();
            }
        }
        let part = self.part_of(source);
        let ai = part.nodes().iter().find(|n| n.name == a).unwrap().id.clone();
        let bi = part.nodes().iter().find(|n| n.name == b).unwrap().id.clone();
        part.add_edge(&ai, &bi, rel, tier, Properties::new(), prov(source)).unwrap();
    }
}

/// Plant-scale fixture split into the three source views. Merging the parts
/// yields exactly 242 nodes and 402 edges: 12 storage rows, 10 conveyor
/// units and 8 robot cells hang off a 114-node backbone, with seeded
/// IO-correlation edges filling the count.
pub fn plant_parts() -> Vec<PropertyGraph> {
    let t1 = Tier::DomainInternal;
    let t2 = Tier::InterDomain;
    let mut b = PlantBuilder::new();

    // backbone types cycle with a long period; repeated assemblies stay the
    // dominant frequent structure instead of backbone windows
    for j in 0..114 {
        b.declare(&format!("BB_{j}"), &format!("Module{:02}", j % 26), t1);
    }
    for i in 0..12 {
        b.declare(&format!("SR_{i}"), "StorageRow", t1);
        for p in 1..=3 {
            b.declare(&format!("SP_{i}_{p}"), "StoragePlace", t1);
        }
    }
    for i in 0..10 {
        b.declare(&format!("CV_{i}"), "Conveyor", t1);
        b.declare(&format!("DR_{i}"), "Drive", t1);
        b.declare(&format!("SN_{i}_a"), "Sensor", t1);
        b.declare(&format!("SN_{i}_b"), "Sensor", t1);
    }
    for i in 0..8 {
        b.declare(&format!("RB_{i}"), "Robot", t1);
        b.declare(&format!("RC_{i}"), "Controller", t1);
        for a in 1..=3 {
            b.declare(&format!("AX_{i}_{a}"), "Axis", t1);
        }
    }

    // storage rows: 5 edges each
    for i in 0..12 {
        for p in 1..=3 {
            b.edge(SourceTag::Plc, &format!("SR_{i}"), &format!("SP_{i}_{p}"), "contains", t1);
        }
        b.edge(SourceTag::Position, &format!("SP_{i}_1"), &format!("SP_{i}_2"), "arranged_next_to", t1);
        b.edge(SourceTag::Position, &format!("SP_{i}_2"), &format!("SP_{i}_3"), "arranged_next_to", t1);
    }
    // conveyor units: 5 edges each
    for i in 0..10 {
        for s in ["a", "b"] {
            b.edge(SourceTag::Plc, &format!("CV_{i}"), &format!("SN_{i}_{s}"), "contains", t1);
            b.edge(SourceTag::Plc, &format!("DR_{i}"), &format!("SN_{i}_{s}"), "reads", t1);
        }
        b.edge(SourceTag::Plc, &format!("CV_{i}"), &format!("DR_{i}"), "contains", t1);
    }
    // robot cells: 6 edges each
    for i in 0..8 {
        b.edge(SourceTag::Plc, &format!("RB_{i}"), &format!("RC_{i}"), "contains", t1);
        for a in 1..=3 {
            b.edge(SourceTag::Plc, &format!("RC_{i}"), &format!("AX_{i}_{a}"), "writes", t1);
        }
        b.edge(SourceTag::Position, &format!("AX_{i}_1"), &format!("AX_{i}_2"), "arranged_next_to", t1);
        b.edge(SourceTag::Position, &format!("AX_{i}_2"), &format!("AX_{i}_3"), "arranged_next_to", t1);
    }
    // backbone chain: 113 edges
    for j in 0..113 {
        b.edge(SourceTag::Position, &format!("BB_{j}"), &format!("BB_{}", j + 1), "arranged_next_to", t1);
    }
    // assembly heads onto the backbone: 30 edges
    let heads: Vec<String> = (0..12)
        .map(|i| format!("SR_{i}"))
        .chain((0..10).map(|i| format!("CV_{i}")))
        .chain((0..8).map(|i| format!("RB_{i}")))
        .collect();
    for (k, head) in heads.iter().enumerate() {
        let anchor = (7 * k + 3) % 114;
        b.edge(SourceTag::Plc, head, &format!("BB_{anchor}"), "functional_group", t1);
    }
    // seeded IO correlations on the backbone: exactly 101 edges, capped at
    // three per type pair so no chord family reaches mining support
    let mut rng = SplitMix64::new(0x0dd5_eed5);
    let mut added = 0;
    let mut taken: std::collections::BTreeSet<(u64, u64)> = std::collections::BTreeSet::new();
    let mut pair_counts: std::collections::BTreeMap<(u64, u64), u32> = std::collections::BTreeMap::new();
    while added < 101 {
        let a = rng.below(114);
        let c = rng.below(114);
        if a == c {
            continue;
        }
        let key = (a.min(c), a.max(c));
        let type_pair = (key.0 % 26, key.1 % 26);
        let type_pair = (type_pair.0.min(type_pair.1), type_pair.0.max(type_pair.1));
        if *pair_counts.get(&type_pair).unwrap_or(&0) >= 3 {
            continue;
        }
        if !taken.insert(key) {
            continue;
        }
        *pair_counts.entry(type_pair).or_insert(0) += 1;
        b.edge(SourceTag::Io, &format!("BB_{}", key.0), &format!("BB_{}", key.1), "correlates_with", t2);
        added += 1;
    }

    vec![b.plc, b.position, b.io]
}

/// Random labeled graph for oracle cross-checks: up to `max_nodes` nodes,
/// up to `max_edges` distinct edges, occasional self-loops, labels drawn from
/// the given alphabets.
pub fn random_labeled_graph(
    rng: &mut SplitMix64,
    max_nodes: usize,
    max_edges: usize,
    node_labels: &[&str],
    edge_labels: &[&str],
) -> PropertyGraph {
    let n = 1 + rng.below(max_nodes as u64) as usize;
    let mut g = PropertyGraph::new();
    let ids: Vec<_> = (0..n)
        .map(|i| {
            let label = node_labels[rng.below(node_labels.len() as u64) as usize];
            g.add_node(format!("N{i}"), label, Tier::DomainInternal, Properties::new(), prov(SourceTag::Plc))
                .unwrap()
        })
        .collect();
    let target = rng.below(max_edges as u64 + 1) as usize;
    for _ in 0..target {
        let a = rng.below(n as u64) as usize;
        let bi = rng.below(n as u64) as usize;
        let rel = edge_labels[rng.below(edge_labels.len() as u64) as usize];
        // duplicates are simply skipped; self-loops stay in occasionally
        let _ = g.add_edge(&ids[a], &ids[bi], rel, Tier::DomainInternal, Properties::new(), prov(SourceTag::Plc));
    }
    g
}

//! The `pipeline` command: one flat key = value config file drives ingest,
//! merge, mine, templatize and export in sequence, with every intermediate
//! written into the output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;

use dtgraph_core::graph::{graph_to_json, to_dot, to_graphml, SourceTag, TierSet};
use dtgraph_core::ingest;
use dtgraph_core::merge::{merge_graphs, MergePolicy};
use dtgraph_core::miner::{mine_frequent, MatchMode, MiningParams, PatternReport};
use dtgraph_core::template::{
    compression_stats, library_to_json, templatize, to_dot_colored, TemplatizeOptions,
};

use crate::{load_taxonomy, read, usage, write, CliResult, IntoCli};

const KNOWN_KEYS: [&str; 17] = [
    "plc",
    "position",
    "io",
    "taxonomy",
    "out_dir",
    "arrangement_threshold",
    "io_cutoff",
    "priority",
    "case_fold",
    "trim",
    "semantic",
    "min_support",
    "max_edges",
    "mode",
    "closed",
    "tiers",
    "max_templates",
];

struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    fn parse(text: &str) -> CliResult<Config> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!("config line {}: expected key = value", lineno + 1)));
            };
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(usage(format!("config line {}: unknown key {key}", lineno + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| usage(format!("config key {key}: cannot parse {raw:?}"))),
        }
    }
}

pub fn cmd_pipeline(config_path: &Path) -> CliResult {
    let config = Config::parse(&read(config_path)?)?;
    let out_dir = PathBuf::from(
        config.get("out_dir").ok_or_else(|| usage("config needs out_dir"))?,
    );
    let taxonomy_path = config.get("taxonomy").map(PathBuf::from);
    let taxonomy = load_taxonomy(&taxonomy_path)?;
    let threshold = config.parsed("arrangement_threshold", ingest::DEFAULT_ARRANGEMENT_THRESHOLD)?;
    let io_cutoff = config.parsed("io_cutoff", ingest::DEFAULT_IO_CUTOFF)?;

    // ingest
    let mut parts = Vec::new();
    for source in SourceTag::ALL {
        let Some(path) = config.get(source.as_str()) else { continue };
        let text = read(Path::new(path))?;
        let declared = ingest::detect_source(&text).with_context(|| path.to_string()).or_usage()?;
        if declared != source {
            return Err(usage(format!("{path} declares source {declared}, config names it {source}")));
        }
        let graph = crate::ingest_one(&text, source, threshold, io_cutoff)
            .with_context(|| path.to_string())
            .or_usage()?;
        let out = out_dir.join(format!("{source}.graph.json"));
        write(&out, &graph_to_json(&graph))?;
        println!("[ingest] {source}: {} nodes, {} edges", graph.node_count(), graph.edge_count());
        parts.push(graph);
    }
    if parts.is_empty() {
        return Err(usage("config names no source files (plc, position, io)"));
    }

    // merge
    let policy = MergePolicy {
        case_fold: config.parsed("case_fold", true)?,
        trim: config.parsed("trim", true)?,
        priority: crate::parse_priority(config.get("priority").unwrap_or("plc,io,position"))?,
        semantic_merge: config.parsed("semantic", true)?,
    };
    let (merged, report) = merge_graphs(&parts, &taxonomy, &policy).or_usage()?;
    write(&out_dir.join("merged.graph.json"), &graph_to_json(&merged))?;
    let mut report_json =
        serde_json::to_string_pretty(&report).expect("report serialization is infallible");
    report_json.push('\n');
    write(&out_dir.join("merge_report.json"), &report_json)?;
    println!(
        "[merge] {} nodes, {} edges, {} components",
        report.nodes_after, report.edges_after, report.component_count
    );

    // mine
    let mode = match config.get("mode").unwrap_or("exact") {
        "exact" => MatchMode::Exact,
        "generalized" => MatchMode::Generalized,
        other => return Err(usage(format!("config key mode: unknown value {other:?}"))),
    };
    let params = MiningParams {
        min_support: config.parsed("min_support", 2)?,
        max_edges: config.parsed("max_edges", dtgraph_core::miner::DEFAULT_MAX_EDGES)?,
        mode,
        closed_only: config.parsed("closed", false)?,
        tier_set: TierSet::parse(config.get("tiers").unwrap_or("1,2")).or_usage()?,
        max_patterns: dtgraph_core::miner::DEFAULT_PATTERN_LIMIT,
    };
    params.validate().or_usage()?;
    let patterns = mine_frequent(&merged, &params, &taxonomy).or_usage()?;
    let pattern_report = PatternReport::from_patterns(&params, &patterns);
    write(&out_dir.join("patterns.json"), &pattern_report.to_json())?;
    println!("[mine] {} frequent patterns", patterns.len());

    // templatize
    let opts = TemplatizeOptions {
        max_templates: config.parsed("max_templates", 8)?,
        mode: params.mode,
        tier_set: params.tier_set.clone(),
    };
    let tg = templatize(&merged, &patterns, &opts, &taxonomy).or_usage()?;
    write(&out_dir.join("templates.json"), &library_to_json(&tg))?;
    let stats = compression_stats(&tg);
    let mut stats_json =
        serde_json::to_string_pretty(&stats).expect("stats serialization is infallible");
    stats_json.push('\n');
    write(&out_dir.join("compression_stats.json"), &stats_json)?;
    println!(
        "[templatize] {} templates, {} instances, reduction {:.3}",
        stats.template_count, stats.instance_nodes, stats.reduction_ratio
    );

    // exports
    write(&out_dir.join("merged.dot"), &to_dot(&merged, &BTreeMap::new()))?;
    write(&out_dir.join("merged.graphml"), &to_graphml(&merged))?;
    write(&out_dir.join("templates.dot"), &to_dot_colored(&tg).or_usage()?)?;
    println!("[export] merged.dot, merged.graphml, templates.dot");
    Ok(())
}

//! `dtgraph`: pipeline for building a plant knowledge graph from the three
//! relation sources, mining repeated structure and compressing it into
//! templates.
//!
//! Stages communicate through JSON files so each one is independently
//! runnable and resumable; `pipeline` chains them from one config file.
//! Exit codes: 0 success, 1 internal error, 2 usage or validation error.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dtgraph_core::graph::{graph_from_json, graph_to_json, to_dot, to_graphml, PropertyGraph, SourceTag, TierSet};
use dtgraph_core::ingest;
use dtgraph_core::merge::{merge_graphs, MergePolicy};
use dtgraph_core::miner::{mine_frequent, MatchMode, MiningParams, PatternReport};
use dtgraph_core::ontology::Taxonomy;
use dtgraph_core::template::{
    compression_stats, expand, library_from_json, library_to_json, templatize, to_dot_colored,
    TemplatizeOptions,
};

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Errors carrying the process exit code: validation problems exit 2,
/// everything unexpected exits 1.
struct CliError {
    code: u8,
    source: anyhow::Error,
}

type CliResult<T = ()> = Result<T, CliError>;

trait IntoCli<T> {
    fn or_usage(self) -> CliResult<T>;
    fn or_internal(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> IntoCli<T> for Result<T, E> {
    fn or_usage(self) -> CliResult<T> {
        self.map_err(|e| CliError { code: EXIT_USAGE, source: e.into() })
    }

    fn or_internal(self) -> CliResult<T> {
        self.map_err(|e| CliError { code: EXIT_INTERNAL, source: e.into() })
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError { code: EXIT_USAGE, source: anyhow!(msg.into()) }
}

#[derive(Parser)]
#[command(name = "dtgraph", version, about = "Plant knowledge graphs: ingest, merge, mine, templatize")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse source record files into partial graph files
    Ingest(IngestArgs),
    /// Merge partial graphs into one knowledge graph
    Merge(MergeArgs),
    /// Mine frequent subgraph patterns from a graph
    Mine(MineArgs),
    /// Promote patterns to templates and compress the graph
    Templatize(TemplatizeArgs),
    /// Expand a template library back into a full graph
    Expand(ExpandArgs),
    /// Export a graph or template library for external tools
    Export(ExportArgs),
    /// Run ingest, merge, mine, templatize and export from a config file
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Source record files (`"source"` field selects the parser)
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Directory for the partial graph files
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Neighborhood distance in meters for position records
    #[arg(long, default_value_t = ingest::DEFAULT_ARRANGEMENT_THRESHOLD)]
    threshold: f64,
    /// Minimum correlation weight an IO edge must reach
    #[arg(long, default_value_t = ingest::DEFAULT_IO_CUTOFF)]
    io_cutoff: f64,
}

#[derive(Args)]
struct MergeArgs {
    /// Partial graph files
    #[arg(required = true)]
    parts: Vec<PathBuf>,
    /// Taxonomy file for type resolution and the semantic pass
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Merge report path (default: next to --out)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Property-conflict priority, e.g. plc,io,position
    #[arg(long, default_value = "plc,io,position")]
    priority: String,
    #[arg(long)]
    no_case_fold: bool,
    #[arg(long)]
    no_trim: bool,
    /// Skip the ontology-based semantic pass
    #[arg(long)]
    no_semantic: bool,
}

#[derive(Args)]
struct MineArgs {
    graph: PathBuf,
    #[arg(long)]
    min_support: usize,
    #[arg(long, default_value_t = dtgraph_core::miner::DEFAULT_MAX_EDGES)]
    max_edges: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Keep only closed patterns (no equal-support super-pattern)
    #[arg(long)]
    closed: bool,
    /// Tiers to mine, e.g. 1,2
    #[arg(long, default_value = "1,2")]
    tiers: String,
    /// Taxonomy file (required for generalized mode)
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long, default_value_t = dtgraph_core::miner::DEFAULT_PATTERN_LIMIT)]
    max_patterns: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Generalized,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> MatchMode {
        match m {
            ModeArg::Exact => MatchMode::Exact,
            ModeArg::Generalized => MatchMode::Generalized,
        }
    }
}

#[derive(Args)]
struct TemplatizeArgs {
    graph: PathBuf,
    patterns: PathBuf,
    #[arg(long, default_value_t = 8)]
    max_templates: usize,
    /// Taxonomy file (needed when the patterns were mined generalized)
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Compression statistics path (default: next to --out)
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct ExpandArgs {
    templates: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    /// Graph file or template library file
    input: PathBuf,
    #[arg(long, value_enum)]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Graphml,
    Dot,
    Json,
}

#[derive(Args)]
struct PipelineArgs {
    /// Flat key = value config file
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.source);
            ExitCode::from(e.code)
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .or_usage()
}

fn write(path: &Path, content: &str) -> CliResult {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))
                .or_internal()?;
        }
    }
    fs::write(path, content)
        .with_context(|| format!("cannot write {}", path.display()))
        .or_internal()
}

fn load_taxonomy(path: &Option<PathBuf>) -> CliResult<Taxonomy> {
    match path {
        Some(p) => Taxonomy::load(&read(p)?)
            .with_context(|| format!("taxonomy {}", p.display()))
            .or_usage(),
        None => Ok(Taxonomy::empty()),
    }
}

fn load_graph(path: &Path) -> CliResult<PropertyGraph> {
    graph_from_json(&read(path)?)
        .with_context(|| format!("graph {}", path.display()))
        .or_usage()
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Ingest(args) => cmd_ingest(&args),
        Command::Merge(args) => cmd_merge(&args),
        Command::Mine(args) => cmd_mine(&args),
        Command::Templatize(args) => cmd_templatize(&args),
        Command::Expand(args) => cmd_expand(&args),
        Command::Export(args) => cmd_export(&args),
        Command::Pipeline(args) => config::cmd_pipeline(&args.config),
    }
}

fn ingest_one(
    text: &str,
    source: SourceTag,
    threshold: f64,
    io_cutoff: f64,
) -> Result<PropertyGraph, ingest::IngestError> {
    match source {
        SourceTag::Plc => ingest::parse_plc_relations(text),
        SourceTag::Position => {
            let set = ingest::parse_position_records(text)?;
            ingest::derive_arrangement(&set, threshold)
        }
        SourceTag::Io => ingest::parse_io_relations(text, io_cutoff),
    }
}

fn cmd_ingest(args: &IngestArgs) -> CliResult {
    for file in &args.files {
        let text = read(file)?;
        let source = ingest::detect_source(&text)
            .with_context(|| format!("{}", file.display()))
            .or_usage()?;
        let graph = ingest_one(&text, source, args.threshold, args.io_cutoff)
            .with_context(|| format!("{}", file.display()))
            .or_usage()?;
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("part");
        let out = args.out_dir.join(format!("{stem}.graph.json"));
        write(&out, &graph_to_json(&graph))?;
        println!(
            "{} ({}): {} nodes, {} edges -> {}",
            file.display(),
            source,
            graph.node_count(),
            graph.edge_count(),
            out.display()
        );
    }
    Ok(())
}

fn parse_priority(text: &str) -> CliResult<[SourceTag; 3]> {
    let tags: Vec<SourceTag> = text
        .split(',')
        .map(|part| SourceTag::parse(part.trim()))
        .collect::<Result<_, _>>()
        .or_usage()?;
    let arr: [SourceTag; 3] =
        tags.try_into().map_err(|_| usage("priority must list exactly three sources"))?;
    Ok(arr)
}

fn cmd_merge(args: &MergeArgs) -> CliResult {
    let parts: Vec<PropertyGraph> =
        args.parts.iter().map(|p| load_graph(p)).collect::<CliResult<_>>()?;
    let taxonomy = load_taxonomy(&args.taxonomy)?;
    let policy = MergePolicy {
        case_fold: !args.no_case_fold,
        trim: !args.no_trim,
        priority: parse_priority(&args.priority)?,
        semantic_merge: !args.no_semantic,
    };
    let (graph, report) = merge_graphs(&parts, &taxonomy, &policy).or_usage()?;
    write(&args.out, &graph_to_json(&graph))?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.out.with_extension("report.json"));
    let mut report_json =
        serde_json::to_string_pretty(&report).expect("report serialization is infallible");
    report_json.push('\n');
    write(&report_path, &report_json)?;
    println!(
        "merged {} parts: {} -> {} nodes, {} -> {} edges, {} components",
        args.parts.len(),
        report.nodes_before,
        report.nodes_after,
        report.edges_before,
        report.edges_after,
        report.component_count
    );
    Ok(())
}

fn mining_params(args: &MineArgs) -> CliResult<MiningParams> {
    let params = MiningParams {
        min_support: args.min_support,
        max_edges: args.max_edges,
        mode: args.mode.into(),
        closed_only: args.closed,
        tier_set: TierSet::parse(&args.tiers).or_usage()?,
        max_patterns: args.max_patterns,
    };
    params.validate().or_usage()?;
    if params.mode == MatchMode::Generalized && args.taxonomy.is_none() {
        return Err(usage("generalized mode needs --taxonomy"));
    }
    Ok(params)
}

fn cmd_mine(args: &MineArgs) -> CliResult {
    let graph = load_graph(&args.graph)?;
    let params = mining_params(args)?;
    let taxonomy = load_taxonomy(&args.taxonomy)?;
    let patterns = mine_frequent(&graph, &params, &taxonomy).or_usage()?;
    let report = PatternReport::from_patterns(&params, &patterns);
    write(&args.out, &report.to_json())?;
    println!("{} frequent patterns -> {}", patterns.len(), args.out.display());
    Ok(())
}

fn cmd_templatize(args: &TemplatizeArgs) -> CliResult {
    let graph = load_graph(&args.graph)?;
    let report = PatternReport::from_json(&read(&args.patterns)?)
        .with_context(|| format!("{}", args.patterns.display()))
        .or_usage()?;
    let patterns = report.to_patterns().or_usage()?;
    let taxonomy = load_taxonomy(&args.taxonomy)?;
    let opts = TemplatizeOptions {
        max_templates: args.max_templates,
        mode: report.params.mode,
        tier_set: report.params.tier_set.clone(),
    };
    let tg = templatize(&graph, &patterns, &opts, &taxonomy).or_usage()?;
    write(&args.out, &library_to_json(&tg))?;
    let stats = compression_stats(&tg);
    let stats_path = args
        .stats
        .clone()
        .unwrap_or_else(|| args.out.with_extension("stats.json"));
    let mut stats_json =
        serde_json::to_string_pretty(&stats).expect("stats serialization is infallible");
    stats_json.push('\n');
    write(&stats_path, &stats_json)?;
    println!(
        "{} templates, {} instances, elements {} -> {} (reduction {:.3})",
        stats.template_count,
        stats.instance_nodes,
        stats.elements_before,
        stats.elements_after,
        stats.reduction_ratio
    );
    Ok(())
}

fn cmd_expand(args: &ExpandArgs) -> CliResult {
    let tg = library_from_json(&read(&args.templates)?)
        .with_context(|| format!("{}", args.templates.display()))
        .or_usage()?;
    let graph = expand(&tg).or_usage()?;
    write(&args.out, &graph_to_json(&graph))?;
    println!("expanded to {} nodes, {} edges", graph.node_count(), graph.edge_count());
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> CliResult {
    let text = read(&args.input)?;
    let looks_like_library = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .map(|v| v.get("templates").is_some())
        .unwrap_or(false);
    let output = if looks_like_library {
        let tg = library_from_json(&text)
            .with_context(|| format!("{}", args.input.display()))
            .or_usage()?;
        match args.format {
            FormatArg::Dot => to_dot_colored(&tg).or_usage()?,
            FormatArg::Graphml => to_graphml(&expand(&tg).or_usage()?),
            FormatArg::Json => graph_to_json(&expand(&tg).or_usage()?),
        }
    } else {
        let graph = graph_from_json(&text)
            .with_context(|| format!("{}", args.input.display()))
            .or_usage()?;
        match args.format {
            FormatArg::Dot => to_dot(&graph, &BTreeMap::new()),
            FormatArg::Graphml => to_graphml(&graph),
            FormatArg::Json => graph_to_json(&graph),
        }
    };
    write(&args.out, &output)?;
    println!("exported {}", args.out.display());
    Ok(())
}

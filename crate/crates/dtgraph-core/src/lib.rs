//! Core library of the `dtgraph` toolkit.
//!
//! Relation data about an existing plant arrives from three kinds of sources
//! (control-code analysis, component positions, IO-signal correlations). This
//! crate merges those partial views into one tiered labeled property graph,
//! mines frequently repeated subgraph patterns in it, and compresses the graph
//! into reusable templates plus instances.

pub mod graph;
pub mod ontology;
pub mod ingest;
pub mod merge;
pub mod miner;
pub mod template;
pub mod fixtures;

pub use graph::{Edge, EdgeId, GraphError, Node, NodeId, PropValue, PropertyGraph, SourceTag, Tier, TierSet};
pub use ontology::{Taxonomy, TaxonomyError, TypeResolution};
pub use merge::{MergePolicy, MergeReport};
pub use miner::{DfsCode, EdgeTuple, Embedding, MatchMode, MineError, MiningParams, Pattern, PatternGraph};
pub use template::{Template, TemplateError, TemplatizedGraph};

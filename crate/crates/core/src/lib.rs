//! Exploratory search for journalists: multi-source retrieval, a per-session
//! inverted index, BM25-ranked named entities and an evidence-carrying
//! entity connection graph, served over a small HTTP API.

pub mod config;
pub mod corpus;
pub mod extract;
pub mod graph;
pub mod pipeline;
pub mod rank;
pub mod service;
pub mod sources;
pub mod synth;
pub mod text;

pub use corpus::{dedup, load_corpus, AnnotatedDocument, DedupReport, Document, Source};
pub use extract::{BioTag, Entity, EntityKey, EntityLabel, EntityMention, Gazetteer};
pub use config::AppConfig;
pub use graph::{build_graph, export_graph, merge, ConnectionGraph};
pub use rank::{rank_entities, RankedEntities};
pub use text::{bm25_query, bm25_term, build_index, tokenize, Bm25Params, InvertedIndex, Token};
pub use pipeline::{analyze, PipelineConfig, Stage, StageError, Tagger};
pub use service::{EventKind, InteractionEvent, Service, UsageMetrics};
pub use sources::{SourceQuery, SourceResult, Sources, TabSet};

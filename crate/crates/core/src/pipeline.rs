//! The analysis chain shared by the service and the CLI: index the corpus,
//! label every document, canonicalize mentions and rank the entities.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{DedupConfig, Document};
use crate::extract::{canonicalize, decode_mentions, label_tokens, Entity, EntityMention, ExternalExtractor, Gazetteer};
use crate::rank::{rank_with, Aggregation, RankedEntities, DEFAULT_TOP_K};
use crate::text::{build_index, tokenize, Bm25Params, InvertedIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub bm25: Bm25Params,
    pub top_k: usize,
    pub dedup: DedupConfig,
    pub workers: usize,
    pub aggregation: Aggregation,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bm25: Bm25Params::default(),
            top_k: DEFAULT_TOP_K,
            dedup: DedupConfig::default(),
            workers: default_workers(),
            aggregation: Aggregation::default(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.bm25.validate()?;
        if self.top_k == 0 {
            return Err("top_k must be at least 1".into());
        }
        if self.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        if self.dedup.shingle_k == 0 {
            return Err("dedup.shingle_k must be at least 1".into());
        }
        if !(self.dedup.threshold > 0.0 && self.dedup.threshold <= 1.0) {
            return Err(format!("dedup.threshold must lie in (0, 1], got {}", self.dedup.threshold));
        }
        Ok(())
    }
}

/// Pipeline stage names, reported with errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Validate,
    Session,
    Search,
    Dedup,
    Index,
    Extract,
    Rank,
    Graph,
    Expand,
    Log,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Validate => "validate",
            Stage::Session => "session",
            Stage::Search => "search",
            Stage::Dedup => "dedup",
            Stage::Index => "index",
            Stage::Extract => "extract",
            Stage::Rank => "rank",
            Stage::Graph => "graph",
            Stage::Expand => "expand",
            Stage::Log => "log",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        StageError {
            stage,
            message: message.to_string(),
        }
    }
}

/// Which tagger labels the tokens.
pub enum Tagger {
    Baseline(Gazetteer),
    External { extractor: ExternalExtractor, gazetteer: Gazetteer },
}

impl Tagger {
    pub fn gazetteer(&self) -> &Gazetteer {
        match self {
            Tagger::Baseline(g) | Tagger::External { gazetteer: g, .. } => g,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub index: InvertedIndex,
    pub mentions: Vec<EntityMention>,
    pub entities: Vec<Entity>,
    pub ranked: RankedEntities,
}

/// Mentions found by the baseline tagger in one document.
pub fn baseline_mentions(doc: &Document, gazetteer: &Gazetteer) -> Result<Vec<EntityMention>, StageError> {
    let tokens = tokenize(&doc.body);
    let tags = label_tokens(doc, &tokens, gazetteer).map_err(|e| StageError::new(Stage::Extract, e))?;
    decode_mentions(&tags, &tokens, doc).map_err(|e| StageError::new(Stage::Extract, e))
}

fn finish(
    docs: &[Document],
    config: &PipelineConfig,
    index: InvertedIndex,
    per_doc: Vec<Vec<EntityMention>>,
) -> Analysis {
    debug_assert_eq!(per_doc.len(), docs.len());
    let mentions: Vec<EntityMention> = per_doc.into_iter().flatten().collect();
    let entities = canonicalize(&mentions);
    let ranked = rank_with(&entities, &index, config.bm25, config.top_k, config.aggregation);
    Analysis {
        index,
        mentions,
        entities,
        ranked,
    }
}

/// Runs the chain with the baseline tagger; documents are labelled in
/// parallel.
pub fn analyze(docs: &[Document], config: &PipelineConfig, gazetteer: &Gazetteer) -> Result<Analysis, StageError> {
    let index = build_index(docs, config.workers).map_err(|e| StageError::new(Stage::Index, e))?;
    let per_doc = docs
        .par_iter()
        .map(|d| baseline_mentions(d, gazetteer))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finish(docs, config, index, per_doc))
}

pub async fn analyze_with(docs: &[Document], config: &PipelineConfig, tagger: &Tagger) -> Result<Analysis, StageError> {
    match tagger {
        Tagger::Baseline(g) => analyze(docs, config, g),
        Tagger::External { extractor, gazetteer } => {
            let index = build_index(docs, config.workers).map_err(|e| StageError::new(Stage::Index, e))?;
            let calls = docs.iter().map(|doc| async move {
                let tokens = tokenize(&doc.body);
                let out = extractor
                    .extract(doc, &tokens, gazetteer)
                    .await
                    .map_err(|e| StageError::new(Stage::Extract, e))?;
                decode_mentions(&out.tags, &tokens, doc).map_err(|e| StageError::new(Stage::Extract, e))
            });
            let per_doc = futures::future::join_all(calls)
                .await
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?;
            Ok(finish(docs, config, index, per_doc))
        }
    }
}

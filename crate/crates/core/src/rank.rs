//! BM25 scoring of canonical entities and top-k selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::extract::Entity;
use crate::text::{bm25_term, Bm25Params, IndexError, InvertedIndex};

pub const DEFAULT_TOP_K: usize = 15;

/// How per-document BM25 sums are combined into one entity score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sum over every containing document.
    #[default]
    SumOverDocs,
    /// Best single document.
    MaxOverDocs,
    /// Number of mentions; ignores BM25 entirely.
    MentionCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntities {
    pub entries: Vec<Entity>,
    pub k: usize,
}

impl RankedEntities {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Sum over the entity's documents of the BM25 weights of its surface tokens.
pub fn score_entity(entity: &Entity, index: &InvertedIndex, params: Bm25Params) -> Result<f64, IndexError> {
    score_with(entity, index, params, Aggregation::SumOverDocs)
}

pub fn score_with(
    entity: &Entity,
    index: &InvertedIndex,
    params: Bm25Params,
    aggregation: Aggregation,
) -> Result<f64, IndexError> {
    if index.is_empty() {
        return Err(IndexError::EmptyIndex);
    }
    if aggregation == Aggregation::MentionCount {
        return Ok(entity.mentions.len() as f64);
    }
    let mut total = 0.0;
    let mut best: f64 = 0.0;
    for doc in &entity.doc_ids {
        let mut in_doc = 0.0;
        for term in entity.key.terms() {
            in_doc += bm25_term(term, doc, index, params)?;
        }
        total += in_doc;
        best = best.max(in_doc);
    }
    Ok(match aggregation {
        Aggregation::MaxOverDocs => best,
        _ => total,
    })
}

/// Scores every entity, drops zero scores, sorts by score descending then key
/// ascending and keeps the first `k`. Entities whose documents are not in the
/// index score zero.
pub fn rank_entities(entities: &[Entity], index: &InvertedIndex, params: Bm25Params, k: usize) -> RankedEntities {
    rank_with(entities, index, params, k, Aggregation::SumOverDocs)
}

pub fn rank_with(
    entities: &[Entity],
    index: &InvertedIndex,
    params: Bm25Params,
    k: usize,
    aggregation: Aggregation,
) -> RankedEntities {
    if index.is_empty() || k == 0 {
        return RankedEntities { entries: Vec::new(), k };
    }
    let mut scored: Vec<Entity> = entities
        .par_iter()
        .filter_map(|e| {
            let score = score_with(e, index, params, aggregation).unwrap_or_else(|err| {
                log::warn!("entity {} not scored: {err}", e.key);
                0.0
            });
            (score > 0.0).then(|| Entity { score, ..e.clone() })
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.key.cmp(&b.key)));
    scored.truncate(k);
    RankedEntities { entries: scored, k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Source};
    use crate::extract::{EntityKey, EntityLabel};
    use crate::text::build_index;
    use std::collections::BTreeSet;

    fn index() -> InvertedIndex {
        build_index(
            &[
                Document::new("d1", Source::Fixture, "acme buys beta"),
                Document::new("d2", Source::Fixture, "acme profits rise"),
                Document::new("d3", Source::Fixture, "beta fails"),
            ],
            1,
        )
        .unwrap()
    }

    fn entity(surface: &str, label: EntityLabel, docs: &[&str]) -> Entity {
        Entity {
            key: EntityKey::from_surface(surface, label),
            display: surface.into(),
            label,
            mentions: vec![],
            doc_ids: docs.iter().map(|d| d.to_string()).collect::<BTreeSet<_>>(),
            score: 0.0,
        }
    }

    #[test]
    fn unseen_tokens_score_zero() {
        let e = entity("Zeta", EntityLabel::Org, &["d1"]);
        assert_eq!(score_entity(&e, &index(), Bm25Params::default()).unwrap(), 0.0);
    }

    #[test]
    fn sums_over_documents() {
        let single = 1.6f64.ln() * 2.2 / 2.3125;
        let e = entity("acme", EntityLabel::Org, &["d1", "d2"]);
        let s = score_entity(&e, &index(), Bm25Params::default()).unwrap();
        assert!((s - 2.0 * single).abs() < 1e-12);
        let max = score_with(&e, &index(), Bm25Params::default(), Aggregation::MaxOverDocs).unwrap();
        assert!((max - single).abs() < 1e-12);
    }

    #[test]
    fn identical_statistics_identical_scores() {
        let a = entity("acme", EntityLabel::Org, &["d1", "d2"]);
        let b = entity("acme", EntityLabel::Per, &["d1", "d2"]);
        let idx = index();
        assert_eq!(
            score_entity(&a, &idx, Bm25Params::default()).unwrap(),
            score_entity(&b, &idx, Bm25Params::default()).unwrap()
        );
    }

    #[test]
    fn empty_index_is_an_error() {
        let e = entity("acme", EntityLabel::Org, &["d1"]);
        assert_eq!(
            score_entity(&e, &InvertedIndex::default(), Bm25Params::default()),
            Err(IndexError::EmptyIndex)
        );
        assert!(rank_entities(&[e], &InvertedIndex::default(), Bm25Params::default(), 3).is_empty());
    }

    #[test]
    fn ranking_order_and_cutoff() {
        let idx = index();
        let es = vec![
            entity("beta", EntityLabel::Misc, &["d3"]),
            entity("acme", EntityLabel::Org, &["d1", "d2"]),
            entity("rise", EntityLabel::Misc, &["d2"]),
            entity("nothing", EntityLabel::Misc, &["d1"]),
        ];
        let r = rank_entities(&es, &idx, Bm25Params::default(), 10);
        let keys: Vec<String> = r.entries.iter().map(|e| e.key.to_string()).collect();
        assert_eq!(keys, ["MISC:rise", "ORG:acme", "MISC:beta"]);
        assert!(r.entries.iter().all(|e| e.score > 0.0));
        let top1 = rank_entities(&es, &idx, Bm25Params::default(), 1);
        assert_eq!(top1.entries[0].key, r.entries[0].key);
        assert!(rank_entities(&[], &idx, Bm25Params::default(), 3).is_empty());
    }
}

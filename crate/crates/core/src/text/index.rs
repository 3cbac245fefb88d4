use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tokenize::tokenize;
use crate::corpus::Document;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: String,
    pub tf: u32,
    pub positions: Vec<u32>,
}

/// Term → postings over one session's documents, plus the length statistics
/// BM25 needs. Postings are sorted by `doc_id`; terms iterate in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InvertedIndex {
    #[serde(rename = "n")]
    pub doc_count: usize,
    pub avgdl: f64,
    pub doc_lengths: BTreeMap<String, u32>,
    pub postings: BTreeMap<String, Vec<Posting>>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("unknown document id `{0}`")]
    UnknownDoc(String),
    #[error("the index is empty")]
    EmptyIndex,
    #[error("worker count must be at least 1")]
    NoWorkers,
}

type PartialPostings = BTreeMap<String, Vec<Posting>>;

fn index_chunk(docs: &[&Document]) -> (PartialPostings, Vec<(String, u32)>) {
    let mut postings: PartialPostings = BTreeMap::new();
    let mut lengths = Vec::with_capacity(docs.len());
    for doc in docs {
        let tokens = tokenize(&doc.body);
        lengths.push((doc.id.clone(), tokens.len() as u32));
        let mut per_doc: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for tok in tokens {
            per_doc.entry(tok.text).or_default().push(tok.position as u32);
        }
        for (term, positions) in per_doc {
            postings.entry(term).or_default().push(Posting {
                doc_id: doc.id.clone(),
                tf: positions.len() as u32,
                positions,
            });
        }
    }
    (postings, lengths)
}

/// Builds the index with `workers` threads. Documents are ordered by id and
/// split into contiguous chunks; each chunk is tokenized and indexed on its
/// own thread, then the partial postings are concatenated in chunk order.
/// The result does not depend on `workers`.
pub fn build_index(docs: &[Document], workers: usize) -> Result<InvertedIndex, IndexError> {
    if workers == 0 {
        return Err(IndexError::NoWorkers);
    }
    let mut sorted: Vec<&Document> = docs.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = sorted.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(IndexError::DuplicateId(w[0].id.clone()));
    }
    if sorted.is_empty() {
        return Ok(InvertedIndex::default());
    }

    let chunk_len = sorted.len().div_ceil(workers);
    let partials: Vec<(PartialPostings, Vec<(String, u32)>)> = if workers == 1 {
        vec![index_chunk(&sorted)]
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        pool.install(|| sorted.par_chunks(chunk_len).map(index_chunk).collect())
    };

    let mut index = InvertedIndex {
        doc_count: sorted.len(),
        ..InvertedIndex::default()
    };
    let mut total: u64 = 0;
    for (postings, lengths) in partials {
        for (term, mut list) in postings {
            index.postings.entry(term).or_default().append(&mut list);
        }
        for (id, len) in lengths {
            total += len as u64;
            index.doc_lengths.insert(id, len);
        }
    }
    index.avgdl = total as f64 / index.doc_count as f64;
    Ok(index)
}

impl InvertedIndex {
    pub fn is_empty(&self) -> bool {
        self.doc_count == 0
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<u32> {
        self.doc_lengths.get(doc_id).copied()
    }

    pub fn term_freq(&self, term: &str, doc_id: &str) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| {
                list.binary_search_by(|p| p.doc_id.as_str().cmp(doc_id))
                    .ok()
                    .map(|i| list[i].tf)
            })
            .unwrap_or(0)
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.doc_lengths.contains_key(doc_id)
    }

    pub fn doc_ids(&self) -> HashSet<&str> {
        self.doc_lengths.keys().map(String::as_str).collect()
    }

    /// Deterministic JSON dump (`n`, `avgdl`, `doc_lengths`, sorted `postings`).
    pub fn debug_dump(&self) -> String {
        serde_json::to_string_pretty(self).expect("index serializes")
    }

    /// Hex SHA-256 of the compact JSON dump; equal indexes have equal digests.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("index serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

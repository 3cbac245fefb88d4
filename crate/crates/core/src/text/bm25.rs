use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::index::{IndexError, InvertedIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(format!("k1 must be a finite value >= 0, got {}", self.k1));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(format!("b must lie in [0, 1], got {}", self.b));
        }
        Ok(())
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; never negative.
pub fn idf(doc_count: usize, doc_freq: usize) -> f64 {
    let n = doc_count as f64;
    let df = doc_freq as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

fn saturate(tf: f64, dl: f64, avgdl: f64, params: Bm25Params) -> f64 {
    let norm = if avgdl > 0.0 { dl / avgdl } else { 0.0 };
    tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * norm))
}

/// BM25 weight of `term` in `doc_id`. Zero when the term is absent.
pub fn bm25_term(
    term: &str,
    doc_id: &str,
    index: &InvertedIndex,
    params: Bm25Params,
) -> Result<f64, IndexError> {
    if index.is_empty() {
        return Err(IndexError::EmptyIndex);
    }
    let dl = index
        .doc_len(doc_id)
        .ok_or_else(|| IndexError::UnknownDoc(doc_id.to_string()))?;
    let tf = index.term_freq(term, doc_id);
    if tf == 0 {
        return Ok(0.0);
    }
    let weight = idf(index.doc_count, index.doc_freq(term));
    Ok(weight * saturate(tf as f64, dl as f64, index.avgdl, params))
}

/// Top-`k` documents for the summed term scores, ties by ascending doc id.
/// Documents scoring zero are left out.
pub fn bm25_query(
    terms: &[String],
    index: &InvertedIndex,
    params: Bm25Params,
    k: usize,
) -> Vec<(String, f64)> {
    if terms.is_empty() || index.is_empty() || k == 0 {
        return Vec::new();
    }
    let mut scores: HashMap<&str, f64> = HashMap::new();
    for term in terms {
        let Some(list) = index.postings.get(term) else {
            continue;
        };
        let weight = idf(index.doc_count, list.len());
        for p in list {
            let dl = index.doc_lengths[&p.doc_id] as f64;
            *scores.entry(p.doc_id.as_str()).or_insert(0.0) +=
                weight * saturate(p.tf as f64, dl, index.avgdl, params);
        }
    }
    let mut ranked: Vec<(String, f64)> = scores
        .into_iter()
        .filter(|&(_, s)| s > 0.0)
        .map(|(id, s)| (id.to_string(), s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

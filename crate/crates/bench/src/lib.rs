//! Shared inputs for the criterion benchmarks.

use dminr_core::synth::{synthetic_corpus, DEFAULT_SEED};
use dminr_core::Document;

/// Worker counts swept by the index benchmarks.
pub const WORKER_SWEEP: [usize; 4] = [1, 2, 4, 8];

pub fn bench_corpus(docs: usize) -> Vec<Document> {
    synthetic_corpus(docs, DEFAULT_SEED)
}

//! Tokenization, the per-session inverted index and BM25 scoring.

mod bm25;
mod index;
mod tokenize;

pub use bm25::{bm25_query, bm25_term, idf, Bm25Params};
pub use index::{build_index, IndexError, InvertedIndex, Posting};
pub use tokenize::{terms, tokenize, Token};

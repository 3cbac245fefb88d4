//! Document collections: loading, near-duplicate removal and annotation sets.
//!
//! Corpus files are UTF-8 JSONL with one [`Document`] per line. Annotation
//! files use the `{"text": ..., "labels": [[start, end, label], ...]}` line
//! format understood by common span-labelling tools; offsets are code points.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::extract::EntityLabel;
use crate::text::tokenize;

/// Where a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Articles,
    Companies,
    Officers,
    Web,
    Fixture,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Articles => "articles",
            Source::Companies => "companies",
            Source::Officers => "officers",
            Source::Web => "web",
            Source::Fixture => "fixture",
        }
    }

    /// Human-readable kind of record, used to label graph connections.
    pub fn evidence_kind(self) -> &'static str {
        match self {
            Source::Articles => "news story",
            Source::Companies => "companies-house record",
            Source::Officers => "officer record",
            Source::Web => "web result",
            Source::Fixture => "fixture document",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "articles" => Ok(Source::Articles),
            "companies" => Ok(Source::Companies),
            "officers" => Ok(Source::Officers),
            "web" => Ok(Source::Web),
            "fixture" => Ok(Source::Fixture),
            other => Err(format!("unknown source `{other}`")),
        }
    }
}

/// A retrieved text item. The body is what gets indexed and labelled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: Source,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default, deserialize_with = "null_as_empty")]
    pub url: String,
    #[serde(default)]
    pub published_at: Option<String>,
    #[serde(default)]
    pub topic: Option<String>,
}

fn null_as_empty<'de, D>(d: D) -> Result<String, D::Error>
where
    D: serde::Deserializer<'de>,
{
    Ok(Option::<String>::deserialize(d)?.unwrap_or_default())
}

impl Document {
    pub fn new(id: impl Into<String>, source: Source, body: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            source,
            title: String::new(),
            body: body.into(),
            url: String::new(),
            published_at: None,
            topic: None,
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = url.into();
        self
    }

    pub fn with_topic(mut self, topic: impl Into<String>) -> Self {
        self.topic = Some(topic.into());
        self
    }

    /// Checks the per-record invariants (non-empty id, parseable date).
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty document id".into());
        }
        if let Some(date) = &self.published_at {
            if !is_iso8601(date) {
                return Err(format!("published_at `{date}` is not an ISO-8601 date"));
            }
        }
        Ok(())
    }
}

fn is_iso8601(s: &str) -> bool {
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
        || chrono::DateTime::parse_from_rfc3339(s).is_ok()
        || chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").is_ok()
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate document id `{id}` (first seen on line {first_line})")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
        first_line: usize,
    },
    #[error("no topics given")]
    NoTopics,
    #[error("invalid annotation span ({start}, {end}) in text of length {len}")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("overlapping annotation spans ({0}, {1}) and ({2}, {3})")]
    OverlappingSpans(usize, usize, usize, usize),
    #[error("annotation bounds: per_topic_min {min} > per_topic_max {max}")]
    BadBounds { min: usize, max: usize },
}

/// Parses JSONL records from `path`, reporting 1-based line numbers. Blank
/// lines are skipped.
pub(crate) fn read_jsonl<T, F>(path: &Path, mut check: F) -> Result<Vec<(usize, T)>, CorpusError>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(&T) -> Result<(), String>,
{
    let file = fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        check(&record).map_err(|message| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: lineno,
            message,
        })?;
        out.push((lineno, record));
    }
    Ok(out)
}

/// Loads a corpus file, keeping file order and rejecting repeated ids.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let records = read_jsonl::<Document, _>(path, Document::validate)?;
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut docs = Vec::with_capacity(records.len());
    for (line, doc) in records {
        if let Some(&first_line) = seen.get(&doc.id) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: doc.id,
                first_line,
            });
        }
        seen.insert(doc.id.clone(), line);
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus(docs: &[Document], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for doc in docs {
        let line = serde_json::to_string(doc).expect("document serializes");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// near-duplicate removal

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    pub shingle_k: usize,
    pub threshold: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            shingle_k: 5,
            threshold: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDoc {
    pub dropped_id: String,
    pub kept_id: String,
    pub jaccard: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DedupReport {
    pub kept: Vec<String>,
    pub dropped: Vec<DroppedDoc>,
}

/// Token fingerprint of one document used for near-duplicate comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shingles {
    /// Fewer tokens than the shingle width: compared by exact sequence.
    Short(Vec<String>),
    Set(HashSet<Vec<String>>),
}

impl Shingles {
    pub fn of(text: &str, k: usize) -> Self {
        assert!(k >= 1, "shingle width must be at least 1");
        let tokens: Vec<String> = tokenize(text).into_iter().map(|t| t.text).collect();
        if tokens.len() < k {
            return Shingles::Short(tokens);
        }
        Shingles::Set(tokens.windows(k).map(|w| w.to_vec()).collect())
    }

    pub fn jaccard(&self, other: &Shingles) -> f64 {
        match (self, other) {
            (Shingles::Set(a), Shingles::Set(b)) => {
                let inter = a.intersection(b).count();
                let union = a.len() + b.len() - inter;
                inter as f64 / union as f64
            }
            (Shingles::Short(a), Shingles::Short(b)) if a == b => 1.0,
            _ => 0.0,
        }
    }
}

/// Greedy near-duplicate filter in input order: a document is dropped when its
/// shingle Jaccard with an earlier kept document reaches `threshold`. The
/// recorded `kept_id` is the first such kept document.
pub fn dedup(docs: &[Document], shingle_k: usize, threshold: f64) -> DedupReport {
    assert!(shingle_k >= 1, "shingle_k must be >= 1");
    assert!(
        threshold > 0.0 && threshold <= 1.0,
        "threshold must lie in (0, 1]"
    );
    let mut kept: Vec<(&str, Shingles)> = Vec::new();
    let mut report = DedupReport::default();
    for doc in docs {
        let sh = Shingles::of(&doc.body, shingle_k);
        let hit = kept.iter().find_map(|(id, other)| {
            let j = sh.jaccard(other);
            (j >= threshold).then_some((*id, j))
        });
        match hit {
            Some((kept_id, jaccard)) => report.dropped.push(DroppedDoc {
                dropped_id: doc.id.clone(),
                kept_id: kept_id.to_string(),
                jaccard,
            }),
            None => {
                report.kept.push(doc.id.clone());
                kept.push((&doc.id, sh));
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// topic buckets for annotation

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topic {
    pub name: String,
    pub query: String,
}

impl Topic {
    pub fn new(name: impl Into<String>, query: impl Into<String>) -> Self {
        Topic {
            name: name.into(),
            query: query.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shortfall {
    pub topic: String,
    pub found: usize,
    pub wanted: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    pub buckets: BTreeMap<String, Vec<Document>>,
    pub shortfalls: Vec<Shortfall>,
}

/// True when every token of `query` occurs among the tokens of the
/// document's title or body.
pub fn matches_all_terms(doc: &Document, query_terms: &[String]) -> bool {
    if query_terms.is_empty() {
        return false;
    }
    let vocab: HashSet<String> = tokenize(&doc.title)
        .into_iter()
        .chain(tokenize(&doc.body))
        .map(|t| t.text)
        .collect();
    query_terms.iter().all(|t| vocab.contains(t))
}

/// Collects up to `per_topic_max` matching documents per topic, recording a
/// shortfall for topics with fewer than `per_topic_min` matches.
pub fn build_annotation_set(
    docs: &[Document],
    topics: &[Topic],
    per_topic_min: usize,
    per_topic_max: usize,
) -> Result<AnnotationSet, CorpusError> {
    if topics.is_empty() {
        return Err(CorpusError::NoTopics);
    }
    if per_topic_min > per_topic_max {
        return Err(CorpusError::BadBounds {
            min: per_topic_min,
            max: per_topic_max,
        });
    }
    let mut set = AnnotationSet::default();
    for topic in topics {
        let terms: Vec<String> = tokenize(&topic.query).into_iter().map(|t| t.text).collect();
        let bucket: Vec<Document> = docs
            .iter()
            .filter(|d| matches_all_terms(d, &terms))
            .take(per_topic_max)
            .cloned()
            .collect();
        if bucket.len() < per_topic_min {
            log::warn!(
                "topic `{}`: only {} of the wanted {} documents matched",
                topic.name,
                bucket.len(),
                per_topic_min
            );
            set.shortfalls.push(Shortfall {
                topic: topic.name.clone(),
                found: bucket.len(),
                wanted: per_topic_min,
            });
        }
        set.buckets.insert(topic.name.clone(), bucket);
    }
    Ok(set)
}

/// The seven topic areas used when the original annotation corpus was built.
pub fn default_topics() -> Vec<Topic> {
    vec![
        Topic::new("Twitter misinformation flagging", "twitter misinformation"),
        Topic::new("Mars Lander", "mars lander"),
        Topic::new("Right to Repair", "right to repair"),
        Topic::new("Aircraft", "aircraft"),
        Topic::new("Government", "government"),
        Topic::new("Historic Scotland Building", "historic scotland"),
        Topic::new("Trade", "trade"),
    ]
}

// ---------------------------------------------------------------------------
// annotation export

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub text: String,
    pub labels: Vec<(usize, usize, EntityLabel)>,
}

impl AnnotatedDocument {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let len = self.text.chars().count();
        let mut spans: Vec<(usize, usize)> = Vec::with_capacity(self.labels.len());
        for &(start, end, _) in &self.labels {
            if start >= end || end > len {
                return Err(CorpusError::SpanOutOfBounds { start, end, len });
            }
            spans.push((start, end));
        }
        spans.sort_unstable();
        for w in spans.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(CorpusError::OverlappingSpans(w[0].0, w[0].1, w[1].0, w[1].1));
            }
        }
        Ok(())
    }
}

pub fn export_annotations(
    annotated: &[AnnotatedDocument],
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    for doc in annotated {
        doc.validate()?;
    }
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for doc in annotated {
        writeln!(w, "{}", serde_json::to_string(doc).expect("annotation serializes")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn import_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotatedDocument>, CorpusError> {
    let path = path.as_ref();
    let records = read_jsonl::<AnnotatedDocument, _>(path, |d| d.validate().map_err(|e| e.to_string()))?;
    Ok(records.into_iter().map(|(_, d)| d).collect())
}

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use super::{SourceError, SourceQuery, TAB_SOURCES};
use crate::corpus::{matches_all_terms, read_jsonl, Document, Source};
use crate::text::terms;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureRecord {
    pub doc: Document,
    /// Set on officer records only.
    pub company_id: Option<String>,
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(flatten)]
    doc: Document,
    #[serde(default)]
    company_id: Option<String>,
}

pub(super) fn load_source_file(dir: &Path, source: Source) -> Result<Vec<FixtureRecord>, SourceError> {
    let file = format!("{source}.jsonl");
    let path = dir.join(&file);
    if !path.is_file() {
        return Err(SourceError::MissingFixture {
            dir: dir.to_path_buf(),
            file,
        });
    }
    let mut seen: HashMap<String, ()> = HashMap::new();
    let records = read_jsonl::<RawRecord, _>(&path, |r| {
        r.doc.validate()?;
        if r.doc.source != source {
            return Err(format!("record source `{}` in {source}.jsonl", r.doc.source));
        }
        if source == Source::Officers && r.company_id.as_deref().map_or(true, str::is_empty) {
            return Err("officer record without `company_id`".into());
        }
        if seen.insert(r.doc.id.clone(), ()).is_some() {
            return Err(format!("duplicate document id `{}`", r.doc.id));
        }
        Ok(())
    })?;
    Ok(records
        .into_iter()
        .map(|(_, r)| FixtureRecord {
            doc: r.doc,
            company_id: r.company_id,
        })
        .collect())
}

/// Case-insensitive all-terms match over title and body, in file order.
/// Officer queries are further restricted to the parent company.
pub(super) fn search(records: &[FixtureRecord], q: &SourceQuery, limit: usize) -> Vec<Document> {
    let query_terms = terms(&q.text);
    records
        .iter()
        .filter(|r| match (&q.officer_parent, &r.company_id) {
            (Some(parent), Some(company)) if q.source == Source::Officers => parent == company,
            (Some(_), None) if q.source == Source::Officers => false,
            _ => true,
        })
        .filter(|r| matches_all_terms(&r.doc, &query_terms))
        .take(limit)
        .map(|r| r.doc.clone())
        .collect()
}

/// All four fixture files of one directory.
#[derive(Debug, Clone, Default)]
pub struct FixtureStore {
    records: BTreeMap<Source, Vec<FixtureRecord>>,
}

impl FixtureStore {
    pub fn records(&self, source: Source) -> &[FixtureRecord] {
        self.records.get(&source).map_or(&[], Vec::as_slice)
    }

    pub fn counts(&self) -> BTreeMap<Source, usize> {
        self.records.iter().map(|(s, r)| (*s, r.len())).collect()
    }

    pub fn search(&self, q: &SourceQuery) -> Result<Vec<Document>, SourceError> {
        q.validate()?;
        Ok(search(self.records(q.source), q, q.max_results))
    }
}

/// Loads `articles.jsonl`, `companies.jsonl`, `officers.jsonl` and
/// `web.jsonl`; every file must be present.
pub fn load_fixtures(dir: impl AsRef<Path>) -> Result<FixtureStore, SourceError> {
    let dir = dir.as_ref();
    let mut store = FixtureStore::default();
    for source in TAB_SOURCES {
        store.records.insert(source, load_source_file(dir, source)?);
    }
    log::info!(
        "loaded fixtures from {}: {}",
        dir.display(),
        store
            .counts()
            .iter()
            .map(|(s, n)| format!("{s}={n}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(store)
}

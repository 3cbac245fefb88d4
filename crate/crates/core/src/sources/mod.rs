//! Per-source search back-ends: news articles, company registry (companies
//! and their officers) and web search. Results stay separated by source; a
//! `TabSet` is never merged into one list.

mod fixtures;
mod live;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Source};

pub use fixtures::{load_fixtures, FixtureRecord, FixtureStore};
pub use live::map_live_item;

/// The four searchable sources, in tab order.
pub const TAB_SOURCES: [Source; 4] = [Source::Articles, Source::Companies, Source::Officers, Source::Web];

pub const DEFAULT_MAX_RESULTS: usize = 10;
pub const DEFAULT_LIVE_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceQuery {
    pub text: String,
    pub source: Source,
    pub max_results: usize,
    /// Registry id of the company whose officers are wanted.
    pub officer_parent: Option<String>,
}

impl SourceQuery {
    pub fn new(text: impl Into<String>, source: Source) -> Self {
        SourceQuery {
            text: text.into(),
            source,
            max_results: DEFAULT_MAX_RESULTS,
            officer_parent: None,
        }
    }

    pub fn with_parent(mut self, company_id: impl Into<String>) -> Self {
        self.officer_parent = Some(company_id.into());
        self
    }

    pub fn validate(&self) -> Result<(), SourceError> {
        if self.text.trim().is_empty() {
            return Err(SourceError::EmptyQuery);
        }
        if self.max_results == 0 {
            return Err(SourceError::BadQuery("max_results must be at least 1".into()));
        }
        if self.source == Source::Fixture {
            return Err(SourceError::BadQuery("`fixture` is not a searchable source".into()));
        }
        if self.source == Source::Officers && self.officer_parent.is_none() {
            return Err(SourceError::MissingOfficerParent);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceResult {
    pub source: Source,
    pub items: Vec<Document>,
    pub fetched_at: DateTime<Utc>,
    /// A live back-end failed and fixtures (or nothing) were substituted.
    pub degraded: bool,
}

impl SourceResult {
    fn empty(source: Source, degraded: bool) -> Self {
        SourceResult {
            source,
            items: Vec::new(),
            fetched_at: Utc::now(),
            degraded,
        }
    }
}

/// One result list per source; all four keys are always present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TabSet {
    pub tabs: BTreeMap<Source, SourceResult>,
}

impl TabSet {
    pub fn get(&self, source: Source) -> Option<&SourceResult> {
        self.tabs.get(&source)
    }

    /// All items, tab by tab in tab order. For indexing only; the tabs
    /// themselves stay separate.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        TAB_SOURCES
            .iter()
            .filter_map(|s| self.tabs.get(s))
            .flat_map(|r| r.items.iter())
    }

    pub fn counts(&self) -> BTreeMap<Source, usize> {
        self.tabs.iter().map(|(s, r)| (*s, r.items.len())).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SourceError {
    #[error("query text is empty")]
    EmptyQuery,
    #[error("invalid query: {0}")]
    BadQuery(String),
    #[error("officer queries need the parent company id")]
    MissingOfficerParent,
    #[error("source `{0}` has neither live credentials nor fixtures")]
    Unavailable(Source),
    #[error("fixture directory {dir}: missing `{file}`")]
    MissingFixture { dir: PathBuf, file: String },
    #[error(transparent)]
    Fixture(#[from] crate::corpus::CorpusError),
    #[error("live back-end for `{tab}` failed: {message}")]
    Live { tab: Source, message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Fixture,
    Live,
}

/// Settings for one source. Credentials are only read from the environment
/// variable named by `api_key_env`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub mode: Mode,
    pub fixture_dir: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_ms: Option<u64>,
    pub max_results: Option<usize>,
}

impl SourceConfig {
    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        SourceConfig {
            fixture_dir: Some(dir.into()),
            ..Self::default()
        }
    }

    pub fn live(endpoint: impl Into<String>) -> Self {
        SourceConfig {
            mode: Mode::Live,
            endpoint: Some(endpoint.into()),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcesConfig {
    pub articles: SourceConfig,
    pub companies: SourceConfig,
    pub officers: SourceConfig,
    pub web: SourceConfig,
}

impl SourcesConfig {
    /// Every source in fixture mode reading from `dir`.
    pub fn all_fixtures(dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        SourcesConfig {
            articles: SourceConfig::fixture(&dir),
            companies: SourceConfig::fixture(&dir),
            officers: SourceConfig::fixture(&dir),
            web: SourceConfig::fixture(&dir),
        }
    }

    pub fn get(&self, source: Source) -> Option<&SourceConfig> {
        match source {
            Source::Articles => Some(&self.articles),
            Source::Companies => Some(&self.companies),
            Source::Officers => Some(&self.officers),
            Source::Web => Some(&self.web),
            Source::Fixture => None,
        }
    }

    pub fn get_mut(&mut self, source: Source) -> Option<&mut SourceConfig> {
        match source {
            Source::Articles => Some(&mut self.articles),
            Source::Companies => Some(&mut self.companies),
            Source::Officers => Some(&mut self.officers),
            Source::Web => Some(&mut self.web),
            Source::Fixture => None,
        }
    }
}

struct Backend {
    config: SourceConfig,
    fixtures: Option<Vec<FixtureRecord>>,
}

/// The configured back-ends, with fixture files loaded up front.
pub struct Sources {
    backends: BTreeMap<Source, Backend>,
    client: reqwest::Client,
}

impl Sources {
    /// Loads whatever fixture files exist. A source whose fixture file is
    /// missing is kept; searching it fails unless it is live.
    pub fn from_config(config: &SourcesConfig) -> Result<Self, SourceError> {
        let mut backends = BTreeMap::new();
        for source in TAB_SOURCES {
            let cfg = config.get(source).expect("tab source").clone();
            let fixtures = match &cfg.fixture_dir {
                Some(dir) => match fixtures::load_source_file(dir, source) {
                    Ok(records) => Some(records),
                    Err(SourceError::MissingFixture { dir, file }) => {
                        log::warn!("{}: no `{file}`; `{source}` has no fixtures", dir.display());
                        None
                    }
                    Err(e) => return Err(e),
                },
                None => None,
            };
            backends.insert(source, Backend { config: cfg, fixtures });
        }
        Ok(Sources {
            backends,
            client: reqwest::Client::new(),
        })
    }

    pub fn from_store(store: FixtureStore) -> Self {
        let mut backends = BTreeMap::new();
        for source in TAB_SOURCES {
            backends.insert(
                source,
                Backend {
                    config: SourceConfig::default(),
                    fixtures: Some(store.records(source).to_vec()),
                },
            );
        }
        Sources {
            backends,
            client: reqwest::Client::new(),
        }
    }

    fn max_results(&self, q: &SourceQuery) -> usize {
        self.backends[&q.source]
            .config
            .max_results
            .map_or(q.max_results, |m| m.min(q.max_results))
    }

    /// Searches one source. In live mode a failing back-end falls back to
    /// its fixtures (marked degraded) when there are any.
    pub async fn search_source(&self, q: &SourceQuery) -> Result<SourceResult, SourceError> {
        q.validate()?;
        let backend = &self.backends[&q.source];
        let limit = self.max_results(q);
        match backend.config.mode {
            Mode::Fixture => {
                let records = backend.fixtures.as_ref().ok_or(SourceError::Unavailable(q.source))?;
                Ok(SourceResult {
                    source: q.source,
                    items: fixtures::search(records, q, limit),
                    fetched_at: Utc::now(),
                    degraded: false,
                })
            }
            Mode::Live => {
                let timeout = backend
                    .config
                    .timeout_ms
                    .map_or(DEFAULT_LIVE_TIMEOUT, Duration::from_millis);
                match live::fetch(&self.client, &backend.config, q, limit, timeout).await {
                    Ok(items) => Ok(SourceResult {
                        source: q.source,
                        items,
                        fetched_at: Utc::now(),
                        degraded: false,
                    }),
                    Err(err) => {
                        let Some(records) = &backend.fixtures else {
                            return Err(err);
                        };
                        log::warn!("{err}; serving `{}` from fixtures", q.source);
                        Ok(SourceResult {
                            source: q.source,
                            items: fixtures::search(records, q, limit),
                            fetched_at: Utc::now(),
                            degraded: true,
                        })
                    }
                }
            }
        }
    }

    async fn search_or_degrade(&self, q: SourceQuery) -> SourceResult {
        match self.search_source(&q).await {
            Ok(r) => r,
            Err(err) => {
                log::warn!("source `{}` unavailable for {:?}: {err}", q.source, q.text);
                SourceResult::empty(q.source, true)
            }
        }
    }

    /// Queries all four sources concurrently. Officers are looked up for the
    /// top company hit, so that branch waits for the company search. A source
    /// that fails yields an empty, degraded tab.
    pub async fn search_all(&self, text: &str) -> TabSet {
        let articles = self.search_or_degrade(SourceQuery::new(text, Source::Articles));
        let web = self.search_or_degrade(SourceQuery::new(text, Source::Web));
        let registry = async {
            let companies = self.search_or_degrade(SourceQuery::new(text, Source::Companies)).await;
            let officers = match companies.items.first() {
                Some(top) => {
                    self.search_or_degrade(SourceQuery::new(text, Source::Officers).with_parent(top.id.clone()))
                        .await
                }
                None => SourceResult::empty(Source::Officers, companies.degraded),
            };
            (companies, officers)
        };
        let (articles, web, (companies, officers)) = tokio::join!(articles, web, registry);
        TabSet {
            tabs: [articles, companies, officers, web]
                .into_iter()
                .map(|r| (r.source, r))
                .collect(),
        }
    }
}

//! The TOML configuration shared by the service and the CLI.
//!
//! ```toml
//! gazetteer = "gazetteer.tsv"
//!
//! [sources.articles]
//! mode = "fixture"            # or "live"
//! fixture_dir = "fixtures"
//!
//! [sources.web]
//! mode = "live"
//! endpoint = "https://search.example/api"
//! api_key_env = "WEB_SEARCH_KEY"
//! fixture_dir = "fixtures"    # fallback when the live call fails
//!
//! [pipeline]
//! top_k = 15
//! workers = 4
//! aggregation = "sum_over_docs"
//! bm25 = { k1 = 1.2, b = 0.75 }
//! dedup = { shingle_k = 5, threshold = 0.8 }
//!
//! [extractor]
//! kind = "http"
//! url = "http://127.0.0.1:9000"
//! timeout_ms = 10000
//! fallback = true
//!
//! [service]
//! event_log = "logs/events.jsonl"
//! session_ttl_secs = 86400
//! expansion_query = "display"   # or "key", "phrase"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::extract::{ExternalExtractor, ExtractorEndpoint, Gazetteer};
use crate::pipeline::{PipelineConfig, Tagger};
use crate::service::ServiceSettings;
use crate::sources::{SourceError, Sources, SourcesConfig, TAB_SOURCES};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("gazetteer {path}: {message}")]
    Gazetteer { path: PathBuf, message: String },
    #[error(transparent)]
    Sources(#[from] SourceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    #[serde(flatten)]
    pub endpoint: ExtractorEndpoint,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
    #[serde(default = "yes")]
    pub fallback: bool,
    #[serde(default)]
    pub max_concurrent: Option<usize>,
}

fn yes() -> bool {
    true
}

impl ExtractorConfig {
    pub fn build(&self) -> ExternalExtractor {
        let mut ex = ExternalExtractor::new(self.endpoint.clone()).with_fallback(self.fallback);
        if let Some(ms) = self.timeout_ms {
            ex = ex.with_timeout(Duration::from_millis(ms));
        }
        if let Some(n) = self.max_concurrent {
            ex = ex.with_max_concurrent(n);
        }
        ex
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub gazetteer: Option<PathBuf>,
    pub sources: SourcesConfig,
    pub pipeline: PipelineConfig,
    pub extractor: Option<ExtractorConfig>,
    pub service: ServiceSettings,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl AppConfig {
    /// Every source reads fixtures from `dir`; everything else is default.
    pub fn fixtures(dir: impl Into<PathBuf>) -> Self {
        AppConfig {
            sources: SourcesConfig::all_fixtures(dir),
            ..Self::default()
        }
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: AppConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.gazetteer);
        resolve(base, &mut cfg.service.event_log);
        for source in TAB_SOURCES {
            resolve(base, &mut cfg.sources.get_mut(source).expect("tab source").fixture_dir);
        }
        cfg.validate().map_err(|message| ConfigError::Invalid {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.pipeline.validate()?;
        for source in TAB_SOURCES {
            let s = self.sources.get(source).expect("tab source");
            match s.mode {
                crate::sources::Mode::Live if s.endpoint.is_none() => {
                    return Err(format!("sources.{source}: live mode needs `endpoint`"));
                }
                crate::sources::Mode::Fixture if s.fixture_dir.is_none() => {
                    return Err(format!("sources.{source}: fixture mode needs `fixture_dir`"));
                }
                _ => {}
            }
            if s.max_results == Some(0) {
                return Err(format!("sources.{source}: max_results must be at least 1"));
            }
        }
        if self.service.session_ttl_secs == 0 {
            return Err("service.session_ttl_secs must be at least 1".into());
        }
        Ok(())
    }

    /// The configured gazetteer, or an empty one.
    pub fn load_gazetteer(&self) -> Result<Gazetteer, ConfigError> {
        match &self.gazetteer {
            Some(path) => Gazetteer::load(path).map_err(|e| ConfigError::Gazetteer {
                path: path.clone(),
                message: e.to_string(),
            }),
            None => Ok(Gazetteer::default()),
        }
    }

    pub fn tagger(&self) -> Result<Tagger, ConfigError> {
        let gazetteer = self.load_gazetteer()?;
        Ok(match &self.extractor {
            Some(ex) => Tagger::External {
                extractor: ex.build(),
                gazetteer,
            },
            None => Tagger::Baseline(gazetteer),
        })
    }

    pub fn sources(&self) -> Result<Sources, ConfigError> {
        Ok(Sources::from_config(&self.sources)?)
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }
}

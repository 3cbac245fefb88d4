//! Session lifecycle: search, index, extract, rank and graph a query, then
//! grow the session by expanding entities. Sessions live in memory; the
//! event log is the only durable artifact.

pub mod events;
pub mod http;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{dedup, Document, Source};
use crate::extract::{Entity, EntityKey, EntityLabel};
use crate::graph::{build_graph, merge, ConnectionGraph, NodeLink};
use crate::pipeline::{analyze_with, Analysis, PipelineConfig, Stage, StageError, Tagger};
use crate::rank::{rank_with, RankedEntities};
use crate::sources::{SourceResult, Sources, TabSet, TAB_SOURCES};
use crate::text::InvertedIndex;

pub use events::{
    compute_metrics, read_event_log, session_users, write_event_log, EventKind, EventLog, InteractionEvent, Tab,
    UsageMetrics,
};

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(24 * 60 * 60);

/// What text an expansion searches for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionQuery {
    /// The entity's display text, e.g. `Acme Corp`.
    #[default]
    Display,
    /// The normalized key surface, e.g. `acme corp`.
    Key,
    /// The display text in double quotes.
    Phrase,
}

impl ExpansionQuery {
    pub fn text_for(self, key: &EntityKey, display: &str) -> String {
        match self {
            ExpansionQuery::Display => display.to_string(),
            ExpansionQuery::Key => key.surface.clone(),
            ExpansionQuery::Phrase => format!("\"{display}\""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    /// JSONL event log; events stay in memory when unset.
    pub event_log: Option<PathBuf>,
    pub session_ttl_secs: u64,
    pub expansion_query: ExpansionQuery,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        ServiceSettings {
            event_log: None,
            session_ttl_secs: DEFAULT_SESSION_TTL.as_secs(),
            expansion_query: ExpansionQuery::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{stage}: {message}")]
    Invalid { stage: Stage, message: String },
    #[error("{stage}: {message}")]
    NotFound { stage: Stage, message: String },
    #[error("session `{0}` has expired")]
    Expired(String),
    #[error(transparent)]
    Internal(#[from] StageError),
}

impl ServiceError {
    fn invalid(stage: Stage, message: impl std::fmt::Display) -> Self {
        ServiceError::Invalid {
            stage,
            message: message.to_string(),
        }
    }

    fn not_found(stage: Stage, message: impl std::fmt::Display) -> Self {
        ServiceError::NotFound {
            stage,
            message: message.to_string(),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            ServiceError::Invalid { stage, .. } | ServiceError::NotFound { stage, .. } => *stage,
            ServiceError::Expired(_) => Stage::Session,
            ServiceError::Internal(e) => e.stage,
        }
    }

    pub fn message(&self) -> String {
        match self {
            ServiceError::Invalid { message, .. } | ServiceError::NotFound { message, .. } => message.clone(),
            ServiceError::Internal(e) => e.message.clone(),
            other => other.to_string(),
        }
    }
}

/// A ranked entity as returned to the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntitySummary {
    pub id: EntityKey,
    pub display: String,
    pub label: EntityLabel,
    pub score: f64,
    pub mentions: usize,
    pub docs: Vec<String>,
}

impl From<&Entity> for EntitySummary {
    fn from(e: &Entity) -> Self {
        EntitySummary {
            id: e.key.clone(),
            display: e.display.clone(),
            label: e.label,
            score: e.score,
            mentions: e.mentions.len(),
            docs: e.doc_ids.iter().cloned().collect(),
        }
    }
}

/// Response to `POST /api/session`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPayload {
    pub session_id: String,
    pub tabs: TabSet,
    pub entities: Vec<EntitySummary>,
    pub graph: NodeLink,
}

/// Immutable snapshot of one session. Writers replace the whole snapshot.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub id: String,
    pub user: String,
    pub queries: Vec<(String, DateTime<Utc>)>,
    pub corpus: Vec<Document>,
    pub index: InvertedIndex,
    /// Every canonical entity of the corpus, unranked.
    pub entities: Vec<Entity>,
    pub ranked: RankedEntities,
    pub graph: ConnectionGraph,
    pub tabs: TabSet,
    pub created_at: DateTime<Utc>,
    pub last_active: DateTime<Utc>,
}

impl SessionState {
    pub fn doc(&self, id: &str) -> Option<&Document> {
        self.corpus.iter().find(|d| d.id == id)
    }
}

struct SessionSlot {
    /// Serializes create/expand for this session.
    writer: tokio::sync::Mutex<()>,
    snapshot: RwLock<Arc<SessionState>>,
    touched: Mutex<Instant>,
}

impl SessionSlot {
    fn read(&self) -> Arc<SessionState> {
        self.snapshot.read().expect("session lock").clone()
    }
}

pub struct Service {
    sources: Sources,
    pipeline: PipelineConfig,
    tagger: Tagger,
    log: EventLog,
    ttl: Duration,
    expansion: ExpansionQuery,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
}

fn unique_by_id(docs: impl IntoIterator<Item = Document>, seen: &mut HashSet<String>) -> Vec<Document> {
    docs.into_iter().filter(|d| seen.insert(d.id.clone())).collect()
}

impl Service {
    pub fn new(sources: Sources, pipeline: PipelineConfig, tagger: Tagger, settings: &ServiceSettings) -> std::io::Result<Self> {
        let log = match &settings.event_log {
            Some(path) => EventLog::open(path)?,
            None => EventLog::in_memory(),
        };
        Ok(Service {
            sources,
            pipeline,
            tagger,
            log,
            ttl: Duration::from_secs(settings.session_ttl_secs),
            expansion: settings.expansion_query,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    /// Overrides the idle timeout; mainly for tests.
    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    pub fn pipeline(&self) -> &PipelineConfig {
        &self.pipeline
    }

    pub fn event_log(&self) -> &EventLog {
        &self.log
    }

    fn slot(&self, id: &str) -> Result<Arc<SessionSlot>, ServiceError> {
        let slot = self
            .sessions
            .read()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(Stage::Session, format!("unknown session `{id}`")))?;
        let mut touched = slot.touched.lock().expect("session clock");
        if touched.elapsed() > self.ttl {
            drop(touched);
            self.sessions.write().expect("sessions lock").remove(id);
            return Err(ServiceError::Expired(id.to_string()));
        }
        *touched = Instant::now();
        drop(touched);
        Ok(slot)
    }

    /// Current snapshot of a session.
    pub fn session(&self, id: &str) -> Result<Arc<SessionState>, ServiceError> {
        Ok(self.slot(id)?.read())
    }

    /// Drops every session idle for longer than the TTL; returns how many.
    pub fn purge_expired(&self) -> usize {
        let mut sessions = self.sessions.write().expect("sessions lock");
        let before = sessions.len();
        sessions.retain(|_, slot| slot.touched.lock().expect("session clock").elapsed() <= self.ttl);
        before - sessions.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("sessions lock").len()
    }

    fn record(&self, session: &str, kind: EventKind) -> Result<(), ServiceError> {
        let event = InteractionEvent {
            session: session.to_string(),
            kind,
            timestamp: Utc::now(),
        };
        self.log
            .append(&event)
            .map_err(|e| ServiceError::Internal(StageError::new(Stage::Log, e)))
    }

    async fn analyze(&self, corpus: &[Document]) -> Result<Analysis, ServiceError> {
        Ok(analyze_with(corpus, &self.pipeline, &self.tagger).await?)
    }

    /// Drops near-duplicates among `fresh`, comparing against `existing` too.
    fn dedup_new(&self, existing: &[Document], fresh: Vec<Document>) -> Vec<Document> {
        if fresh.is_empty() {
            return fresh;
        }
        let mut all = existing.to_vec();
        let first_new = all.len();
        all.extend(fresh);
        let report = dedup(&all, self.pipeline.dedup.shingle_k, self.pipeline.dedup.threshold);
        for d in &report.dropped {
            log::debug!("dropped near-duplicate {} (of {}, jaccard {:.3})", d.dropped_id, d.kept_id, d.jaccard);
        }
        let kept: HashSet<String> = report.kept.into_iter().collect();
        all.split_off(first_new)
            .into_iter()
            .filter(|d| kept.contains(&d.id))
            .collect()
    }

    /// Searches every source, analyses the results and opens a session.
    pub async fn create_session(&self, user: &str, query: &str) -> Result<SessionPayload, ServiceError> {
        let query = query.trim();
        if query.is_empty() {
            return Err(ServiceError::invalid(Stage::Validate, "query is empty"));
        }
        let tabs = self.sources.search_all(query).await;
        let mut seen = HashSet::new();
        let fetched = unique_by_id(tabs.documents().cloned(), &mut seen);
        let corpus = self.dedup_new(&[], fetched);
        let analysis = self.analyze(&corpus).await?;
        let graph = build_graph(&analysis.ranked, &corpus, query)
            .map_err(|e| ServiceError::Internal(StageError::new(Stage::Graph, e)))?;

        let id = uuid::Uuid::new_v4().to_string();
        let now = Utc::now();
        let state = SessionState {
            id: id.clone(),
            user: user.to_string(),
            queries: vec![(query.to_string(), now)],
            corpus,
            index: analysis.index,
            entities: analysis.entities,
            ranked: analysis.ranked,
            graph,
            tabs,
            created_at: now,
            last_active: now,
        };
        let payload = SessionPayload {
            session_id: id.clone(),
            tabs: state.tabs.clone(),
            entities: state.ranked.entries.iter().map(EntitySummary::from).collect(),
            graph: state.graph.to_node_link(),
        };
        let slot = Arc::new(SessionSlot {
            writer: tokio::sync::Mutex::new(()),
            snapshot: RwLock::new(Arc::new(state)),
            touched: Mutex::new(Instant::now()),
        });
        self.sessions.write().expect("sessions lock").insert(id.clone(), slot);
        self.record(
            &id,
            EventKind::Query {
                text: query.to_string(),
                user: Some(user.to_string()),
            },
        )?;
        Ok(payload)
    }

    /// Searches for an entity of the session graph and merges what it finds.
    pub async fn expand(&self, session: &str, entity: &str) -> Result<NodeLink, ServiceError> {
        let key: EntityKey = entity
            .parse()
            .map_err(|e| ServiceError::invalid(Stage::Expand, e))?;
        let slot = self.slot(session)?;
        let _writer = slot.writer.lock().await;
        let current = slot.read();
        let node = current
            .graph
            .nodes
            .get(&key)
            .ok_or_else(|| ServiceError::not_found(Stage::Expand, format!("entity `{key}` is not in the session graph")))?;
        let query = self.expansion.text_for(&key, &node.display);

        let tabs = self.sources.search_all(&query).await;
        let mut seen: HashSet<String> = current.corpus.iter().map(|d| d.id.clone()).collect();
        let fetched = unique_by_id(tabs.documents().cloned(), &mut seen);
        let fresh = self.dedup_new(&current.corpus, fetched);
        log::info!("expand {key} in {session}: {} new documents", fresh.len());

        let mut corpus = current.corpus.clone();
        corpus.extend(fresh);
        let analysis = self.analyze(&corpus).await?;
        let mut delta = build_graph(&analysis.ranked, &corpus, &query)
            .map_err(|e| ServiceError::Internal(StageError::new(Stage::Graph, e)))?;
        // Credit the expansion query only to entities found in its results,
        // or surfaced for the first time by this expansion.
        let retrieved: HashSet<&str> = tabs.documents().map(|d| d.id.as_str()).collect();
        for (key, node) in delta.nodes.iter_mut() {
            let hit = node.doc_ids.iter().any(|id| retrieved.contains(id.as_str()));
            if !hit && current.graph.nodes.contains_key(key) {
                node.origin_queries.clear();
            }
        }
        let graph = merge(&current.graph, &delta);

        let now = Utc::now();
        let mut queries = current.queries.clone();
        queries.push((query, now));
        let next = SessionState {
            id: current.id.clone(),
            user: current.user.clone(),
            queries,
            corpus,
            index: analysis.index,
            entities: analysis.entities,
            ranked: analysis.ranked,
            graph,
            tabs,
            created_at: current.created_at,
            last_active: now,
        };
        let out = next.graph.to_node_link();
        *slot.snapshot.write().expect("session lock") = Arc::new(next);
        self.record(session, EventKind::Expand { entity: key.to_string() })?;
        Ok(out)
    }

    /// The session graph, or with `k` a graph re-ranked to the top `k`
    /// entities of the whole session corpus.
    pub fn graph(&self, session: &str, k: Option<usize>) -> Result<NodeLink, ServiceError> {
        let state = self.session(session)?;
        let Some(k) = k else {
            return Ok(state.graph.to_node_link());
        };
        if k == 0 {
            return Err(ServiceError::invalid(Stage::Rank, "k must be at least 1"));
        }
        let ranked = rank_with(&state.entities, &state.index, self.pipeline.bm25, k, self.pipeline.aggregation);
        let latest = state.queries.last().map_or("", |(q, _)| q.as_str());
        let mut graph = build_graph(&ranked, &state.corpus, latest)
            .map_err(|e| ServiceError::Internal(StageError::new(Stage::Graph, e)))?;
        for (key, node) in graph.nodes.iter_mut() {
            if let Some(known) = state.graph.nodes.get(key) {
                node.display = known.display.clone();
                node.origin_queries = known.origin_queries.clone();
            }
        }
        graph.generation = state.graph.generation;
        Ok(graph.to_node_link())
    }

    pub fn tab(&self, session: &str, source: &str) -> Result<SourceResult, ServiceError> {
        let source: Source = source.parse().map_err(|e| ServiceError::invalid(Stage::Validate, e))?;
        if !TAB_SOURCES.contains(&source) {
            return Err(ServiceError::invalid(Stage::Validate, format!("`{source}` is not a result tab")));
        }
        let state = self.session(session)?;
        state
            .tabs
            .get(source)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(Stage::Search, format!("no `{source}` results")))
    }

    pub fn doc(&self, session: &str, doc_id: &str) -> Result<Document, ServiceError> {
        let state = self.session(session)?;
        state
            .doc(doc_id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(Stage::Session, format!("document `{doc_id}` is not in the session")))
    }

    /// Logs a client gesture for an existing session.
    pub fn log_event(&self, session: &str, kind: EventKind) -> Result<(), ServiceError> {
        kind.validate().map_err(|e| ServiceError::invalid(Stage::Log, e))?;
        self.slot(session)?;
        self.record(session, kind)
    }

    /// Metrics over the whole event log.
    pub fn metrics(&self) -> Result<UsageMetrics, ServiceError> {
        let events = self
            .log
            .events()
            .map_err(|e| ServiceError::Internal(StageError::new(Stage::Log, e)))?;
        Ok(compute_metrics(&events, &session_users(&events)))
    }
}


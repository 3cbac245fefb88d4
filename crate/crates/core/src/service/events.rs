//! Interaction events, the append-only event log and usage metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::text::tokenize;

/// A result view the journalist can switch to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tab {
    Articles,
    Companies,
    Officers,
    Web,
    Connections,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    Query {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        user: Option<String>,
    },
    TabView {
        tab: Tab,
    },
    Clickthrough {
        doc_id: String,
    },
    Expand {
        entity: String,
    },
}

impl EventKind {
    pub fn validate(&self) -> Result<(), String> {
        let empty = match self {
            EventKind::Query { text, .. } => text.trim().is_empty().then_some("query text"),
            EventKind::TabView { .. } => None,
            EventKind::Clickthrough { doc_id } => doc_id.is_empty().then_some("clickthrough doc_id"),
            EventKind::Expand { entity } => entity.is_empty().then_some("expand entity"),
        };
        match empty {
            Some(what) => Err(format!("{what} is empty")),
            None => Ok(()),
        }
    }
}

/// One logged gesture. Serialized as
/// `{"session":..,"kind":..,"payload":{..},"timestamp":..}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub session: String,
    #[serde(flatten)]
    pub kind: EventKind,
    pub timestamp: DateTime<Utc>,
}

/// Append-only JSONL file; each event is written with a single `write_all`
/// under a lock, so lines never interleave and per-session order is arrival
/// order.
pub struct EventLog {
    path: Option<PathBuf>,
    file: Mutex<Option<File>>,
    memory: Mutex<Vec<InteractionEvent>>,
}

impl EventLog {
    pub fn open(path: impl Into<PathBuf>) -> std::io::Result<Self> {
        let path = path.into();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(EventLog {
            path: Some(path),
            file: Mutex::new(Some(file)),
            memory: Mutex::new(Vec::new()),
        })
    }

    /// A log that only keeps events in memory.
    pub fn in_memory() -> Self {
        EventLog {
            path: None,
            file: Mutex::new(None),
            memory: Mutex::new(Vec::new()),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(&self, event: &InteractionEvent) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(event).expect("event serializes");
        line.push(b'\n');
        let mut file = self.file.lock().expect("event log lock");
        if let Some(f) = file.as_mut() {
            f.write_all(&line)?;
            f.flush()?;
        } else {
            self.memory.lock().expect("event log lock").push(event.clone());
        }
        Ok(())
    }

    pub fn events(&self) -> std::io::Result<Vec<InteractionEvent>> {
        let _guard = self.file.lock().expect("event log lock");
        match &self.path {
            Some(p) => read_event_log(p),
            None => Ok(self.memory.lock().expect("event log lock").clone()),
        }
    }
}

pub fn read_event_log(path: impl AsRef<Path>) -> std::io::Result<Vec<InteractionEvent>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("event log line {}: {e}", i + 1))
        })?;
        out.push(ev);
    }
    Ok(out)
}

pub fn write_event_log(path: impl AsRef<Path>, events: &[InteractionEvent]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for ev in events {
        serde_json::to_writer(&mut out, ev)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageMetrics {
    pub sessions: usize,
    pub users: usize,
    pub sessions_per_user: f64,
    /// Mean token count per query event.
    pub avg_query_length: f64,
    pub article_list_views: f64,
    pub connections_views: f64,
    pub company_list_views: f64,
    pub officer_list_views: f64,
    pub web_list_views: f64,
    pub clickthroughs: f64,
}

/// Session → user, taken from the `user` field of query events. The first
/// query naming a user wins.
pub fn session_users(events: &[InteractionEvent]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for ev in events {
        if let EventKind::Query { user: Some(user), .. } = &ev.kind {
            map.entry(ev.session.clone()).or_insert_with(|| user.clone());
        }
    }
    map
}

/// Per-session rates are event totals divided by the number of sessions in
/// `session_users`; `sessions_per_user` divides that by the distinct users.
pub fn compute_metrics(events: &[InteractionEvent], session_users: &BTreeMap<String, String>) -> UsageMetrics {
    let sessions = session_users.len();
    let users = session_users.values().collect::<BTreeSet<_>>().len();
    let mut query_count = 0usize;
    let mut query_tokens = 0usize;
    let mut tab_counts: BTreeMap<Tab, usize> = BTreeMap::new();
    let mut clicks = 0usize;
    for ev in events {
        match &ev.kind {
            EventKind::Query { text, .. } => {
                query_count += 1;
                query_tokens += tokenize(text).len();
            }
            EventKind::TabView { tab } => *tab_counts.entry(*tab).or_default() += 1,
            EventKind::Clickthrough { .. } => clicks += 1,
            EventKind::Expand { .. } => {}
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let per_session = |tab: Tab| ratio(tab_counts.get(&tab).copied().unwrap_or(0), sessions);
    UsageMetrics {
        sessions,
        users,
        sessions_per_user: ratio(sessions, users),
        avg_query_length: ratio(query_tokens, query_count),
        article_list_views: per_session(Tab::Articles),
        connections_views: per_session(Tab::Connections),
        company_list_views: per_session(Tab::Companies),
        officer_list_views: per_session(Tab::Officers),
        web_list_views: per_session(Tab::Web),
        clickthroughs: ratio(clicks, sessions),
    }
}

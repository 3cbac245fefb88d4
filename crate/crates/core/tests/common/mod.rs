#![allow(dead_code)]

use std::path::PathBuf;

use dminr_core::service::{Service, ServiceSettings};
use dminr_core::{AppConfig, PipelineConfig};
use serde_json::Value;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_config() -> AppConfig {
    let mut cfg = AppConfig::fixtures(fixtures_dir());
    cfg.gazetteer = Some(fixtures_dir().join("gazetteer.tsv"));
    cfg.pipeline = PipelineConfig {
        workers: 2,
        ..PipelineConfig::default()
    };
    cfg
}

pub fn fixture_service(settings: &ServiceSettings) -> Service {
    let cfg = fixture_config();
    Service::new(cfg.sources().unwrap(), cfg.pipeline, cfg.tagger().unwrap(), settings).unwrap()
}

/// Replaces the session id and every `fetched_at` timestamp with fixed
/// placeholders.
pub fn normalize_payload(mut v: Value) -> Value {
    if let Some(id) = v.get_mut("session_id") {
        *id = Value::String("<session>".into());
    }
    if let Some(tabs) = v.get_mut("tabs").and_then(Value::as_object_mut) {
        for tab in tabs.values_mut() {
            if let Some(ts) = tab.get_mut("fetched_at") {
                *ts = Value::String("<fetched_at>".into());
            }
        }
    }
    v
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    s
}

/// Compares `actual` with the golden file, or rewrites the file when
/// `DMINR_UPDATE_GOLDEN` is set.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = fixtures_dir().join(name);
    if std::env::var_os("DMINR_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or(expected.lines().count().min(actual.lines().count()) + 1, |i| i + 1);
        Err(format!("{} differs from the golden file at line {line}", path.display()))
    }
}

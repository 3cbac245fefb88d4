//! Thin HTTP adapters for live back-ends.
//!
//! Each adapter issues `GET {endpoint}?q=<text>&limit=<n>` (plus
//! `company_id=<id>` for officers) with `Authorization: Bearer <key>` when
//! `api_key_env` names a set variable. The response is either a JSON array
//! or an object holding the array under `items`, `results`, `articles` or
//! `organic_results`. Items are mapped into documents as follows:
//!
//! | source    | id                        | title                  | body                                    | url              | published_at                 |
//! |-----------|---------------------------|------------------------|-----------------------------------------|------------------|------------------------------|
//! | articles  | `id`, else `url`          | `title`                | `content`, `description` or `body`      | `url`            | `publishedAt`/`published_at` |
//! | companies | `company_number`          | `title`/`company_name` | rendered registry record                | `links.self`     | `date_of_creation`           |
//! | officers  | `officer_id`, else `name` | `name`                 | rendered appointment record             | `links.self`     | `appointed_on`               |
//! | web       | `link`                    | `title`                | `snippet`                               | `link`           | none                         |

use std::time::Duration;

use serde_json::Value;

use super::{SourceConfig, SourceError, SourceQuery};
use crate::corpus::{Document, Source};

fn text(v: &Value, keys: &[&str]) -> Option<String> {
    keys.iter().find_map(|k| {
        let mut cur = v;
        for part in k.split('.') {
            cur = cur.get(part)?;
        }
        match cur {
            Value::String(s) if !s.is_empty() => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        }
    })
}

fn date_only(s: Option<String>) -> Option<String> {
    let s = s?;
    let head: String = s.chars().take(10).collect();
    chrono::NaiveDate::parse_from_str(&head, "%Y-%m-%d").ok().map(|_| head)
}

/// Maps one JSON item from a live back-end into a [`Document`].
pub fn map_live_item(source: Source, item: &Value) -> Option<Document> {
    let doc = match source {
        Source::Articles => {
            let url = text(item, &["url"]).unwrap_or_default();
            Document {
                id: text(item, &["id"]).unwrap_or_else(|| url.clone()),
                source,
                title: text(item, &["title"]).unwrap_or_default(),
                body: text(item, &["content", "description", "body"]).unwrap_or_default(),
                url,
                published_at: date_only(text(item, &["publishedAt", "published_at"])),
                topic: None,
            }
        }
        Source::Companies => {
            let number = text(item, &["company_number"])?;
            let name = text(item, &["title", "company_name"]).unwrap_or_default();
            let mut body = format!("{name}, company number {number}");
            if let Some(status) = text(item, &["company_status"]) {
                body.push_str(&format!(", status {status}"));
            }
            if let Some(date) = text(item, &["date_of_creation"]) {
                body.push_str(&format!(", incorporated {date}"));
            }
            if let Some(addr) = text(item, &["address_snippet", "registered_office_address.locality"]) {
                body.push_str(&format!(", registered office {addr}"));
            }
            body.push('.');
            Document {
                id: number,
                source,
                title: name,
                body,
                url: text(item, &["links.self"]).unwrap_or_default(),
                published_at: date_only(text(item, &["date_of_creation"])),
                topic: None,
            }
        }
        Source::Officers => {
            let name = text(item, &["name"])?;
            let role = text(item, &["officer_role"]).unwrap_or_else(|| "officer".into());
            let mut body = format!("{name}, {role}");
            if let Some(date) = text(item, &["appointed_on"]) {
                body.push_str(&format!(", appointed {date}"));
            }
            body.push('.');
            Document {
                id: text(item, &["officer_id", "links.officer.appointments"]).unwrap_or_else(|| name.clone()),
                source,
                title: name,
                body,
                url: text(item, &["links.self"]).unwrap_or_default(),
                published_at: date_only(text(item, &["appointed_on"])),
                topic: None,
            }
        }
        Source::Web => {
            let link = text(item, &["link"])?;
            Document {
                id: link.clone(),
                source,
                title: text(item, &["title"]).unwrap_or_default(),
                body: text(item, &["snippet"]).unwrap_or_default(),
                url: link,
                published_at: None,
                topic: None,
            }
        }
        Source::Fixture => return None,
    };
    doc.validate().ok().map(|_| doc)
}

pub(super) async fn fetch(
    client: &reqwest::Client,
    cfg: &SourceConfig,
    q: &SourceQuery,
    limit: usize,
    timeout: Duration,
) -> Result<Vec<Document>, SourceError> {
    let fail = |message: String| SourceError::Live {
        tab: q.source,
        message,
    };
    let endpoint = cfg.endpoint.as_deref().ok_or_else(|| fail("no endpoint configured".into()))?;
    let mut params = vec![("q", q.text.clone()), ("limit", limit.to_string())];
    if let Some(parent) = &q.officer_parent {
        params.push(("company_id", parent.clone()));
    }
    let mut req = client.get(endpoint).query(&params).timeout(timeout);
    if let Some(var) = &cfg.api_key_env {
        match std::env::var(var) {
            Ok(key) => req = req.bearer_auth(key),
            Err(_) => return Err(fail(format!("credential variable `{var}` is not set"))),
        }
    }
    let resp = req.send().await.map_err(|e| fail(e.to_string()))?;
    if !resp.status().is_success() {
        return Err(fail(format!("HTTP {}", resp.status())));
    }
    let body = resp.bytes().await.map_err(|e| fail(e.to_string()))?;
    let value: Value = serde_json::from_slice(&body).map_err(|e| fail(e.to_string()))?;
    let items = match &value {
        Value::Array(items) => items.as_slice(),
        Value::Object(obj) => ["items", "results", "articles", "organic_results"]
            .iter()
            .find_map(|k| obj.get(*k).and_then(Value::as_array))
            .map(Vec::as_slice)
            .ok_or_else(|| fail("response has no result array".into()))?,
        _ => return Err(fail("response is not a JSON array or object".into())),
    };
    Ok(items
        .iter()
        .filter_map(|item| map_live_item(q.source, item))
        .take(limit)
        .collect())
}

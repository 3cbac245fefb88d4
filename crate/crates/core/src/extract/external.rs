//! Client for an out-of-process tagger (e.g. a fine-tuned transformer).
//!
//! Wire format, identical over HTTP (`POST /extract`) and a line-delimited
//! stdio pipe:
//!
//! ```text
//! -> {"doc_id": "d1", "tokens": ["Acme", "Corp", "hired", ...]}
//! <- {"tags": ["B-ORG", "I-ORG", "O", ...]}
//! ```
//!
//! Tokens are sent in their original case; models are case sensitive.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::process::{Child, ChildStdin, ChildStdout, Command};
use tokio::sync::{Mutex, Semaphore};

use super::{label_tokens, repair_bio, BioTag, ExtractError, Gazetteer};
use crate::corpus::Document;
use crate::text::Token;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ExtractorEndpoint {
    /// Base URL; requests go to `{url}/extract`.
    Http { url: String },
    Stdio { program: String, #[serde(default)] args: Vec<String> },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExtractRequest<'a> {
    pub doc_id: &'a str,
    pub tokens: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExtractResponse {
    pub tags: Vec<String>,
}

/// Tags for one document, plus the error that forced the baseline fallback.
#[derive(Debug)]
pub struct Extracted {
    pub tags: Vec<BioTag>,
    pub fallback: Option<ExtractError>,
}

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

pub struct ExternalExtractor {
    endpoint: ExtractorEndpoint,
    timeout: Duration,
    fallback: bool,
    client: reqwest::Client,
    pipe: Mutex<Option<Pipe>>,
    permits: Semaphore,
}

impl ExternalExtractor {
    pub fn new(endpoint: ExtractorEndpoint) -> Self {
        ExternalExtractor {
            endpoint,
            timeout: DEFAULT_TIMEOUT,
            fallback: true,
            client: reqwest::Client::new(),
            pipe: Mutex::new(None),
            permits: Semaphore::new(4),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_fallback(mut self, fallback: bool) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn with_max_concurrent(mut self, n: usize) -> Self {
        self.permits = Semaphore::new(n.max(1));
        self
    }

    /// Asks the external tagger for tags. Orphan `I-` tags are repaired. On
    /// any failure the baseline tagger is used instead when fallback is on.
    pub async fn extract(&self, doc: &Document, tokens: &[Token], gazetteer: &Gazetteer) -> Result<Extracted, ExtractError> {
        match self.call(doc, tokens).await {
            Ok(tags) => Ok(Extracted { tags, fallback: None }),
            Err(err) if self.fallback => {
                log::warn!("external extractor failed for `{}`: {err}; using baseline", doc.id);
                Ok(Extracted {
                    tags: label_tokens(doc, tokens, gazetteer)?,
                    fallback: Some(err),
                })
            }
            Err(err) => Err(err),
        }
    }

    async fn call(&self, doc: &Document, tokens: &[Token]) -> Result<Vec<BioTag>, ExtractError> {
        let chars: Vec<char> = doc.body.chars().collect();
        super::baseline::check_tokens(doc, tokens, &chars)?;
        let request = ExtractRequest {
            doc_id: &doc.id,
            tokens: tokens
                .iter()
                .map(|t| chars[t.char_start..t.char_end].iter().collect())
                .collect(),
        };
        let _permit = self.permits.acquire().await.expect("semaphore open");
        let response = match tokio::time::timeout(self.timeout, self.roundtrip(&request)).await {
            Ok(r) => r,
            Err(_) => Err(ExtractError::Timeout(self.timeout)),
        };
        if response.is_err() {
            self.reset_pipe().await;
        }
        let response = response?;
        if response.tags.len() != tokens.len() {
            return Err(ExtractError::LengthMismatch {
                tags: response.tags.len(),
                tokens: tokens.len(),
            });
        }
        let mut tags = response
            .tags
            .iter()
            .map(|t| t.parse::<BioTag>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ExtractError::MalformedResponse(e.to_string()))?;
        repair_bio(&mut tags);
        Ok(tags)
    }

    async fn roundtrip(&self, request: &ExtractRequest<'_>) -> Result<ExtractResponse, ExtractError> {
        match &self.endpoint {
            ExtractorEndpoint::Http { url } => {
                let url = format!("{}/extract", url.trim_end_matches('/'));
                let resp = self
                    .client
                    .post(url)
                    .json(request)
                    .send()
                    .await
                    .map_err(|e| ExtractError::Transport(e.to_string()))?;
                if !resp.status().is_success() {
                    return Err(ExtractError::Transport(format!("HTTP {}", resp.status())));
                }
                let body = resp.bytes().await.map_err(|e| ExtractError::Transport(e.to_string()))?;
                serde_json::from_slice(&body).map_err(|e| ExtractError::MalformedResponse(e.to_string()))
            }
            ExtractorEndpoint::Stdio { program, args } => {
                let mut guard = self.pipe.lock().await;
                if guard.is_none() {
                    let mut child = Command::new(program)
                        .args(args)
                        .stdin(std::process::Stdio::piped())
                        .stdout(std::process::Stdio::piped())
                        .kill_on_drop(true)
                        .spawn()
                        .map_err(|e| ExtractError::Transport(format!("spawn `{program}`: {e}")))?;
                    let stdin = child.stdin.take().expect("piped stdin");
                    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
                    *guard = Some(Pipe { child, stdin, stdout });
                }
                let pipe = guard.as_mut().expect("pipe present");
                let mut line = serde_json::to_string(request).expect("request serializes");
                line.push('\n');
                pipe.stdin
                    .write_all(line.as_bytes())
                    .await
                    .map_err(|e| ExtractError::Transport(e.to_string()))?;
                pipe.stdin.flush().await.map_err(|e| ExtractError::Transport(e.to_string()))?;
                let mut reply = String::new();
                let n = pipe
                    .stdout
                    .read_line(&mut reply)
                    .await
                    .map_err(|e| ExtractError::Transport(e.to_string()))?;
                if n == 0 {
                    return Err(ExtractError::Transport("extractor process closed its output".into()));
                }
                serde_json::from_str(&reply).map_err(|e| ExtractError::MalformedResponse(e.to_string()))
            }
        }
    }

    async fn reset_pipe(&self) {
        if let Some(mut pipe) = self.pipe.lock().await.take() {
            let _ = pipe.child.kill().await;
        }
    }
}

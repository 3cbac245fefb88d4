use std::time::Duration;

use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use dminr_core::extract::{label_tokens, ExtractError, ExternalExtractor, ExtractorEndpoint};
use dminr_core::pipeline::{analyze, analyze_with, PipelineConfig, Tagger};
use dminr_core::text::tokenize;
use dminr_core::{BioTag, Document, EntityLabel, Gazetteer, Source};

fn gazetteer() -> Gazetteer {
    Gazetteer::from_pairs([("acme corp", EntityLabel::Org), ("jane doe", EntityLabel::Per)])
}

fn doc() -> Document {
    Document::new("d1", Source::Articles, "Acme Corp hired Jane Doe in Glasgow.")
}

/// Serves `POST /extract` with `handler`; returns the base URL.
async fn mock(handler: fn(Value) -> Value) -> String {
    let app = Router::new().route("/extract", post(move |Json(req): Json<Value>| async move { Json(handler(req)) }));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn all_o(req: Value) -> Value {
    let n = req["tokens"].as_array().unwrap().len();
    json!({"tags": vec!["O"; n]})
}

fn capitalized_are_misc(req: Value) -> Value {
    let tags: Vec<&str> = req["tokens"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| if t.as_str().unwrap().starts_with(char::is_uppercase) { "I-MISC" } else { "O" })
        .collect();
    json!({"tags": tags})
}

fn too_short(_: Value) -> Value {
    json!({"tags": ["O"]})
}

#[tokio::test]
async fn echo_stub_all_o_passes_through() {
    let url = mock(all_o).await;
    let ex = ExternalExtractor::new(ExtractorEndpoint::Http { url });
    let d = doc();
    let out = ex.extract(&d, &tokenize(&d.body), &gazetteer()).await.unwrap();
    assert!(out.fallback.is_none());
    assert!(out.tags.iter().all(|t| *t == BioTag::O));
}

#[tokio::test]
async fn tokens_are_sent_in_original_case_and_orphans_repaired() {
    let url = mock(capitalized_are_misc).await;
    let ex = ExternalExtractor::new(ExtractorEndpoint::Http { url });
    let d = doc();
    let out = ex.extract(&d, &tokenize(&d.body), &gazetteer()).await.unwrap();
    use BioTag::*;
    use EntityLabel::Misc;
    assert_eq!(out.tags, [B(Misc), I(Misc), O, B(Misc), I(Misc), O, B(Misc)]);
}

#[tokio::test]
async fn wrong_length_falls_back_to_baseline() {
    let url = mock(too_short).await;
    let d = doc();
    let toks = tokenize(&d.body);
    let ex = ExternalExtractor::new(ExtractorEndpoint::Http { url: url.clone() });
    let out = ex.extract(&d, &toks, &gazetteer()).await.unwrap();
    assert!(matches!(out.fallback, Some(ExtractError::LengthMismatch { tags: 1, tokens: 7 })));
    assert_eq!(out.tags, label_tokens(&d, &toks, &gazetteer()).unwrap());

    let strict = ExternalExtractor::new(ExtractorEndpoint::Http { url }).with_fallback(false);
    assert!(matches!(
        strict.extract(&d, &toks, &gazetteer()).await,
        Err(ExtractError::LengthMismatch { .. })
    ));
}

#[tokio::test]
async fn unreachable_endpoint_equals_baseline() {
    let ex = ExternalExtractor::new(ExtractorEndpoint::Http {
        url: "http://127.0.0.1:9".into(),
    })
    .with_timeout(Duration::from_secs(2));
    let d = doc();
    let toks = tokenize(&d.body);
    let out = ex.extract(&d, &toks, &gazetteer()).await.unwrap();
    assert!(out.fallback.is_some());
    assert_eq!(out.tags, label_tokens(&d, &toks, &gazetteer()).unwrap());
}

const STDIO_TAGGER: &str = r#"
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    toks = req["tokens"]
    if req["doc_id"] == "slow":
        import time; time.sleep(5)
    tags = []
    for i, t in enumerate(toks):
        if t == "Acme":
            tags.append("B-ORG")
        elif t == "Corp" and i > 0 and toks[i - 1] == "Acme":
            tags.append("I-ORG")
        else:
            tags.append("O")
    print(json.dumps({"tags": tags}), flush=True)
"#;

fn python() -> Option<String> {
    ["python3", "python"]
        .into_iter()
        .find(|p| std::process::Command::new(p).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(str::to_string)
}

#[tokio::test]
async fn stdio_tagger_and_timeout_recovery() {
    let Some(py) = python() else {
        eprintln!("python not available; skipping stdio tagger test");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("tagger.py");
    std::fs::write(&script, STDIO_TAGGER).unwrap();
    let ex = ExternalExtractor::new(ExtractorEndpoint::Stdio {
        program: py,
        args: vec![script.display().to_string()],
    })
    .with_timeout(Duration::from_millis(1500));

    let d = doc();
    let toks = tokenize(&d.body);
    let out = ex.extract(&d, &toks, &gazetteer()).await.unwrap();
    assert!(out.fallback.is_none(), "{:?}", out.fallback);
    assert_eq!(&out.tags[..3], &[BioTag::B(EntityLabel::Org), BioTag::I(EntityLabel::Org), BioTag::O]);

    let slow = Document::new("slow", Source::Articles, "Acme Corp again.");
    let out = ex.extract(&slow, &tokenize(&slow.body), &gazetteer()).await.unwrap();
    assert!(matches!(out.fallback, Some(ExtractError::Timeout(_))));

    // the pipe was reset, so the next request gets its own answer
    let out = ex.extract(&d, &toks, &gazetteer()).await.unwrap();
    assert!(out.fallback.is_none());
    assert_eq!(out.tags.len(), toks.len());
}

#[tokio::test]
async fn pipeline_with_failing_extractor_matches_baseline_pipeline() {
    let docs = vec![
        doc(),
        Document::new("d2", Source::Web, "Jane Doe left Acme Corp last year."),
    ];
    let cfg = PipelineConfig {
        workers: 1,
        ..PipelineConfig::default()
    };
    let tagger = Tagger::External {
        extractor: ExternalExtractor::new(ExtractorEndpoint::Http {
            url: "http://127.0.0.1:9".into(),
        }),
        gazetteer: gazetteer(),
    };
    let external = analyze_with(&docs, &cfg, &tagger).await.unwrap();
    let baseline = analyze(&docs, &cfg, &gazetteer()).unwrap();
    assert_eq!(external.mentions, baseline.mentions);
    assert_eq!(external.ranked, baseline.ranked);
}

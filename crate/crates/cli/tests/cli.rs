use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn dminr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dminr")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    fixtures().join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_version_exit_zero_usage_errors_exit_one() {
    assert_eq!(dminr(&["--help"]).status.code(), Some(0));
    assert_eq!(dminr(&["--version"]).status.code(), Some(0));
    assert_eq!(dminr(&[]).status.code(), Some(1));
    assert_eq!(dminr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(dminr(&["pipeline"]).status.code(), Some(1));
    assert_eq!(dminr(&["bench", "--synth", "10", "--workers", "0"]).status.code(), Some(1));
}

#[test]
fn pipeline_prints_ranked_table_and_graph() {
    let out = dminr(&[
        "pipeline",
        "--in",
        &fixture("articles.jsonl"),
        "--gazetteer",
        &fixture("gazetteer.tsv"),
        "--k",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rank\tentity\tdisplay\tscore\tdocs"));
    let rows: Vec<&str> = lines.by_ref().take_while(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().any(|r| r.contains("ORG:acme corp")));
    let graph: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(graph["nodes"].as_array().unwrap().len(), 5);
}

#[test]
fn pipeline_on_empty_corpus_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dminr(&["pipeline", "--in", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().next(), Some("rank\tentity\tdisplay\tscore\tdocs"));
}

#[test]
fn data_errors_exit_two() {
    let out = dminr(&["pipeline", "--in", "/definitely/not/here.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    let out = dminr(&[
        "pipeline",
        "--in",
        &fixture("articles.jsonl"),
        "--gazetteer",
        "/definitely/not/here.tsv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_reports_precision_recall_f1() {
    let out = dminr(&[
        "eval",
        "--gold",
        &fixture("eval/gold_half.jsonl"),
        "--gazetteer",
        &fixture("gazetteer.tsv"),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["precision", "recall", "f1"] {
        assert!((report[key].as_f64().unwrap() - 0.5).abs() < 1e-9, "{key}");
    }

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("gold.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dminr(&["eval", "--gold", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("documents\t0\n"));
}

#[test]
fn bench_emits_csv_with_unit_baseline() {
    let out = dminr(&["bench", "--synth", "300", "--workers", "1,2", "--repeat", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "workers,docs,build_ms,speedup");
    assert!(rows[1].starts_with("1,300,") && rows[1].ends_with(",1.000"));
    assert!(rows[2].starts_with("2,300,"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn ingest_reports_syndicated_copy() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let mut text = std::fs::read_to_string(fixtures().join("articles.jsonl")).unwrap();
    text.push_str(&std::fs::read_to_string(fixtures().join("web.jsonl")).unwrap());
    std::fs::write(&corpus, text).unwrap();
    let report = dir.path().join("report.json");
    let out = dminr(&["ingest", "--in", corpus.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    let dropped = report["dropped"].to_string();
    assert!(dropped.contains("w3"), "{dropped}");
}

#[test]
fn synth_log_matches_shipped_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("events.jsonl");
    let out = dminr(&["synth-log", "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(out_path).unwrap(),
        std::fs::read(fixtures().join("replay/events.jsonl")).unwrap()
    );
}

#[test]
fn serve_check_validates_configuration() {
    assert_eq!(dminr(&["serve", "--fixtures", &fixtures().display().to_string(), "--check"]).status.code(), Some(0));
    assert_eq!(dminr(&["--config", &fixture("dminr.toml"), "serve", "--check"]).status.code(), Some(0));
    assert_eq!(dminr(&["serve", "--fixtures", "/definitely/not/here", "--check"]).status.code(), Some(2));
    assert_eq!(dminr(&["serve", "--check"]).status.code(), Some(1));
}

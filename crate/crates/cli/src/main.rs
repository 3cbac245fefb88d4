//! `dminr`: run every pipeline stage offline and launch the service.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

use std::fmt;
use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dminr_core::config::AppConfig;
use dminr_core::corpus::{import_annotations, load_corpus};
use dminr_core::extract::{evaluate, predict_baseline, ExtractorEval};
use dminr_core::graph::build_graph;
use dminr_core::pipeline::analyze;
use dminr_core::service::http::{router, router_with_assets, serve};
use dminr_core::service::{write_event_log, Service};
use dminr_core::synth::{replay_log, synthetic_corpus, DEFAULT_SEED};
use dminr_core::text::build_index;
use dminr_core::{dedup, Bm25Params, Document, Gazetteer, PipelineConfig};

#[derive(Parser)]
#[command(name = "dminr", version, about = "Exploratory search pipeline and service")]
struct Cli {
    /// Shared TOML configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a JSONL corpus and report near-duplicates.
    Ingest(IngestArgs),
    /// Index, extract, rank and graph a local corpus.
    Pipeline(PipelineArgs),
    /// Score the baseline tagger against gold annotations.
    Eval(EvalArgs),
    /// Time index construction across worker counts.
    Bench(BenchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Write the synthetic interaction replay log.
    SynthLog(SynthLogArgs),
    /// Write a synthetic JSONL corpus.
    SynthCorpus(SynthCorpusArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Shingle width in tokens.
    #[arg(long)]
    k: Option<usize>,
    /// Jaccard similarity at which a document counts as a duplicate.
    #[arg(long)]
    threshold: Option<f64>,
    /// Where to write the report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Number of top entities kept.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Query text recorded on graph nodes.
    #[arg(long, default_value = "pipeline")]
    query: String,
    /// Write the graph JSON here instead of after the table.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark a generated corpus of this many documents.
    #[arg(long, conflicts_with = "input")]
    synth: Option<usize>,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Comma-separated worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    workers: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Builds per worker count; the median time is reported.
    #[arg(long, default_value_t = 3)]
    repeat: usize,
}

#[derive(Args)]
struct ServeArgs {
    /// Serve every source from this fixture directory.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Static front-end assets to serve next to the API.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Validate the configuration and exit.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct SynthLogArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SynthCorpusArgs {
    #[arg(long)]
    docs: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

fn data(e: impl fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn internal(e: impl fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

type CliResult = Result<(), CliError>;

fn load_config(path: Option<&Path>) -> Result<Option<AppConfig>, CliError> {
    path.map(|p| AppConfig::load(p).map_err(data)).transpose()
}

fn pipeline_config(config: Option<&AppConfig>) -> PipelineConfig {
    config.map(|c| c.pipeline).unwrap_or_default()
}

fn gazetteer(flag: Option<&Path>, config: Option<&AppConfig>) -> Result<Gazetteer, CliError> {
    match (flag, config) {
        (Some(path), _) => Gazetteer::load(path).map_err(data),
        (None, Some(cfg)) => cfg.load_gazetteer().map_err(data),
        (None, None) => Ok(Gazetteer::default()),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(internal)
        }
    }
}

fn ingest(args: IngestArgs, config: Option<&AppConfig>) -> CliResult {
    let mut cfg = pipeline_config(config);
    if let Some(k) = args.k {
        cfg.dedup.shingle_k = k;
    }
    if let Some(t) = args.threshold {
        cfg.dedup.threshold = t;
    }
    cfg.validate().map_err(CliError::Usage)?;
    let docs = load_corpus(&args.input).map_err(data)?;
    let report = dedup(&docs, cfg.dedup.shingle_k, cfg.dedup.threshold);
    eprintln!(
        "{}: {} documents, kept {}, dropped {}",
        args.input.display(),
        docs.len(),
        report.kept.len(),
        report.dropped.len()
    );
    let mut text = serde_json::to_string_pretty(&report).map_err(internal)?;
    text.push('\n');
    write_output(args.out.as_deref(), &text)
}

fn pipeline(args: PipelineArgs, config: Option<&AppConfig>) -> CliResult {
    let mut cfg = pipeline_config(config);
    if let Some(k) = args.k {
        cfg.top_k = k;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.bm25 = Bm25Params {
        k1: args.k1.unwrap_or(cfg.bm25.k1),
        b: args.b.unwrap_or(cfg.bm25.b),
    };
    cfg.validate().map_err(CliError::Usage)?;
    let gaz = gazetteer(args.gazetteer.as_deref(), config)?;
    let docs = load_corpus(&args.input).map_err(data)?;
    let analysis = analyze(&docs, &cfg, &gaz).map_err(data)?;
    let graph = build_graph(&analysis.ranked, &docs, &args.query).map_err(internal)?;

    let mut out = String::from("rank\tentity\tdisplay\tscore\tdocs\n");
    for (i, e) in analysis.ranked.entries.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\t{}\n",
            i + 1,
            e.key,
            e.display,
            e.score,
            e.doc_ids.len()
        ));
    }
    let graph_json = dminr_core::export_graph(&graph);
    match &args.graph_out {
        Some(path) => fs::write(path, format!("{graph_json}\n")).map_err(|e| data(format!("{}: {e}", path.display())))?,
        None => {
            out.push('\n');
            out.push_str(&graph_json);
            out.push('\n');
        }
    }
    write_output(None, &out)
}

fn render_eval(eval: &ExtractorEval, docs: usize) -> String {
    let mut s = format!(
        "documents\t{docs}\ntp\t{}\nfp\t{}\nfn\t{}\nprecision\t{:.3}\nrecall\t{:.3}\nf1\t{:.3}\n",
        eval.tp, eval.fp, eval.fn_, eval.precision, eval.recall, eval.f1
    );
    for (label, c) in &eval.per_label {
        s.push_str(&format!(
            "{label}\ttp={} fp={} fn={} p={:.3} r={:.3} f1={:.3}\n",
            c.tp,
            c.fp,
            c.fn_,
            c.precision(),
            c.recall(),
            c.f1()
        ));
    }
    s
}

fn eval(args: EvalArgs, config: Option<&AppConfig>) -> CliResult {
    let gaz = gazetteer(args.gazetteer.as_deref(), config)?;
    let gold = import_annotations(&args.gold).map_err(data)?;
    let predicted = predict_baseline(&gold, &gaz).map_err(data)?;
    let report = evaluate(&gold, &predicted).map_err(internal)?;
    let text = if args.json {
        format!("{}\n", serde_json::to_string_pretty(&report).map_err(internal)?)
    } else {
        render_eval(&report, gold.len())
    };
    write_output(None, &text)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn bench(args: BenchArgs) -> CliResult {
    if args.workers.is_empty() || args.workers.contains(&0) {
        return Err(CliError::Usage("--workers needs positive worker counts".into()));
    }
    if args.repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".into()));
    }
    let docs: Vec<Document> = match (&args.synth, &args.input) {
        (Some(n), None) => synthetic_corpus(*n, args.seed),
        (None, Some(path)) => load_corpus(path).map_err(data)?,
        _ => return Err(CliError::Usage("give either --synth N or --in CORPUS".into())),
    };
    if docs.len() < 1000 {
        eprintln!("warning: {} documents; timings below 1000 documents are mostly noise", docs.len());
    }

    let mut rows = Vec::new();
    let mut digest: Option<String> = None;
    for &w in &args.workers {
        let mut times = Vec::with_capacity(args.repeat);
        let mut last = None;
        for _ in 0..args.repeat {
            let start = Instant::now();
            let idx = build_index(&docs, w).map_err(data)?;
            times.push(start.elapsed().as_secs_f64() * 1000.0);
            last = Some(idx);
        }
        let d = last.expect("at least one build").digest();
        match &digest {
            None => digest = Some(d),
            Some(first) if *first != d => {
                return Err(CliError::Internal(format!(
                    "index digest with {w} workers ({d}) differs from the first build ({first})"
                )));
            }
            Some(_) => {}
        }
        rows.push((w, median(times)));
    }
    let base = rows
        .iter()
        .find(|(w, _)| *w == 1)
        .or_else(|| rows.iter().min_by_key(|(w, _)| *w))
        .map(|(_, ms)| *ms)
        .expect("non-empty sweep");

    let mut out = String::new();
    out.push_str("# index build benchmark: median of repeated builds, speed-up relative to 1 worker\n");
    out.push_str("# reference: the original tool reported >=4x for all operations and >=10x for index creation on large corpora; hardware-dependent, not asserted\n");
    out.push_str(&format!(
        "# cpus={} repeat={} seed={} digest={}\n",
        std::thread::available_parallelism().map_or(1, |n| n.get()),
        args.repeat,
        args.seed,
        digest.as_deref().unwrap_or("")
    ));
    out.push_str("workers,docs,build_ms,speedup\n");
    for (w, ms) in rows {
        let speedup = if w == 1 { 1.0 } else { base / ms };
        out.push_str(&format!("{w},{},{ms:.3},{speedup:.3}\n", docs.len()));
    }
    write_output(None, &out)
}

fn serve_cmd(args: ServeArgs, config: Option<AppConfig>) -> CliResult {
    let cfg = match (config, &args.fixtures) {
        (Some(cfg), None) => cfg,
        (None, Some(dir)) => {
            if !dir.is_dir() {
                return Err(data(format!("fixture directory {} does not exist", dir.display())));
            }
            let mut cfg = AppConfig::fixtures(dir);
            let gaz = dir.join("gazetteer.tsv");
            if gaz.is_file() {
                cfg.gazetteer = Some(gaz);
            }
            cfg
        }
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --config or --fixtures, not both".into())),
        (None, None) => return Err(CliError::Usage("serve needs --config or --fixtures".into())),
    };
    cfg.validate().map_err(data)?;
    let sources = cfg.sources().map_err(data)?;
    let tagger = cfg.tagger().map_err(data)?;
    if args.check {
        println!("configuration ok");
        return Ok(());
    }
    let service = Service::new(sources, cfg.pipeline, tagger, &cfg.service).map_err(data)?;
    let service = Arc::new(service);
    let app = match &args.assets {
        Some(dir) => router_with_assets(service, dir),
        None => router(service),
    };
    let addr = SocketAddr::new(args.host, args.port);
    let rt = tokio::runtime::Runtime::new().map_err(internal)?;
    rt.block_on(serve(app, addr))
        .map_err(|e| data(format!("cannot serve on {addr}: {e}")))
}

fn synth_log(args: SynthLogArgs) -> CliResult {
    let events = replay_log(args.seed);
    write_event_log(&args.out, &events).map_err(|e| data(format!("{}: {e}", args.out.display())))?;
    eprintln!("wrote {} events to {}", events.len(), args.out.display());
    Ok(())
}

fn synth_corpus(args: SynthCorpusArgs) -> CliResult {
    let docs = synthetic_corpus(args.docs, args.seed);
    dminr_core::corpus::write_corpus(&docs, &args.out).map_err(data)
}

fn run(cli: Cli) -> CliResult {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(a) => ingest(a, config.as_ref()),
        Command::Pipeline(a) => pipeline(a, config.as_ref()),
        Command::Eval(a) => eval(a, config.as_ref()),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve_cmd(a, config),
        Command::SynthLog(a) => synth_log(a),
        Command::SynthCorpus(a) => synth_corpus(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

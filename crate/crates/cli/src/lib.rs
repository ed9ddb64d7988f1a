//! The `opinion` command line.
//!
//! Exit codes: 0 on success, 1 for usage and validation problems, 2 for
//! I/O and backend failures. Diagnostics go to stderr; data goes to stdout,
//! as newline-delimited JSON when `--json` is given.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use opinion_core::backend::{BackendError, BackendKind, CorpusIndex, Generator, RemoteBackend, RetrievalBackend};
use opinion_core::corpus::{build_corpus, read_corpus, report_document, write_corpus, BuildOptions, CorpusError};
use opinion_core::eval::bold::{import_bold, read_prompts, write_prompts};
use opinion_core::eval::{
    render_report, run_eval, Classifier, Classifiers, EvalError, EvalRun, Lexicon, LexiconClassifier, RemoteClassifier,
    ReportFormat,
};
use opinion_core::ingest::{dump_file, stream_comments, stream_submissions, IngestStats, RecordKind};
use opinion_core::prompt::{render_inference, render_training};
use opinion_core::registry::{registry, registry_entries, BiasSource};
use opinion_core::{Bias, ValidationError};
use opinion_server::model::{AnswerStatus, AskRequest};
use opinion_server::{Gateway, GatewayConfig, ServeError, Store, StoreError};
use serde_json::json;

use crate::config::{Config, ConfigError};

#[derive(Debug, Parser)]
#[command(name = "opinion", version, about = "Bias-conditioned instruction tuning toolkit")]
pub struct Cli {
    /// Settings file (TOML). Defaults to $OPINION_CONFIG, then ./opinion.toml.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Emit newline-delimited JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the bias registry.
    Biases,
    /// Count readable and skipped records in the dumps.
    IngestStats(IngestArgs),
    /// Filter the dumps into instruction/response pairs.
    BuildCorpus(BuildArgs),
    /// Print the exact prompt text for a bias and instruction.
    RenderPrompt(RenderArgs),
    /// Run the HTTP gateway.
    Serve(ServeArgs),
    /// Ask one question of several biases and print the answers.
    Ask(AskArgs),
    /// Attitude evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding <Subreddit>_{submissions,comments}.ndjson[.zst|.gz].
    #[arg(long, value_name = "DIR")]
    pub dump: Option<String>,
    /// Restrict to these biases (repeatable). Default: all.
    #[arg(long = "bias", value_name = "ID")]
    pub biases: Vec<String>,
    /// Abort on the first malformed line.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_name = "DIR")]
    pub dump: Option<String>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<String>,
    /// Multiplier on every per-source quota, in (0, 1].
    #[arg(long)]
    pub scale: Option<String>,
    #[arg(long)]
    pub strict: bool,
    /// Also write the per-source filter report as JSON.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    #[arg(long = "bias", value_name = "ID")]
    pub biases: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, value_name = "ID", required_unless_present = "subreddit", conflicts_with = "subreddit")]
    pub bias: Option<String>,
    /// Render for a subreddit directly instead of a bias's serving subreddit.
    #[arg(long)]
    pub subreddit: Option<String>,
    #[arg(long)]
    pub instruction: String,
    /// Render the training form with this response appended.
    #[arg(long)]
    pub response: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct BackendArgs {
    /// Corpus for the retrieval backend.
    #[arg(long, value_name = "PATH")]
    pub corpus: Option<String>,
    /// remote or retrieval.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long, value_name = "URL")]
    pub endpoint_url: Option<String>,
}

impl BackendArgs {
    fn overrides(&self, out: &mut Vec<(&'static str, String)>) {
        push(out, "corpus_path", &self.corpus);
        push(out, "backend.kind", &self.backend);
        push(out, "backend.endpoint_url", &self.endpoint_url);
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub port: Option<String>,
    /// Conversation log.
    #[arg(long, value_name = "PATH")]
    pub store: Option<String>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Bias to ask (repeatable, in answer order).
    #[arg(long = "bias", value_name = "ID", required = true)]
    pub biases: Vec<String>,
    #[arg(long)]
    pub question: String,
    /// Append the turn to this conversation log.
    #[arg(long, value_name = "PATH")]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Generate and classify completions for every prompt and bias.
    Run(EvalRunArgs),
    /// Render a saved run as a table.
    Report(EvalReportArgs),
    /// Convert BOLD prompt files to the prompt format used by `eval run`.
    ImportBold(ImportBoldArgs),
}

#[derive(Debug, Args)]
pub struct EvalRunArgs {
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Prompts, one JSON object per line.
    #[arg(long, value_name = "PATH")]
    pub prompts: PathBuf,
    /// Biases to evaluate (repeatable). Default: all.
    #[arg(long = "bias", value_name = "ID")]
    pub biases: Vec<String>,
    /// Word polarity file for the built-in classifier.
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<String>,
    #[arg(long, value_name = "URL")]
    pub classifier_url: Option<String>,
    #[arg(long, value_name = "URL")]
    pub regard_url: Option<String>,
    /// Where to write the run (cells and counts). Default: stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-sample log, one JSON object per line.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalReportArgs {
    /// A run written by `eval run`.
    #[arg(long, value_name = "PATH")]
    pub run: PathBuf,
    #[arg(long, default_value = "markdown")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct ImportBoldArgs {
    #[arg(long, value_name = "DIR")]
    pub dir: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn push(out: &mut Vec<(&'static str, String)>, key: &'static str, value: &Option<String>) {
    if let Some(v) = value {
        out.push((key, v.clone()));
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: exit 1.
    #[error("{0}")]
    Invalid(String),
    /// I/O or backend trouble: exit 2.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Failed(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Read { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Options(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Validation(v) => v.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Import(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<ServeError> for CliError {
    fn from(e: ServeError) -> Self {
        match e {
            ServeError::Store(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn io_at(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Failed(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, env: &dyn Fn(&str) -> Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    init_logging(cli.verbose, env);
    match execute(cli, env) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8, env: &dyn Fn(&str) -> Option<String>) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = env("RUST_LOG").unwrap_or_else(|| default.to_string());
    let _ = tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::new(filter))
        .try_init();
}

fn settings(cli: &Cli, env: &dyn Fn(&str) -> Option<String>, flags: &[(&str, String)]) -> Result<Config, CliError> {
    let file = config::locate(cli.config.as_deref(), env);
    if let Some((path, _)) = &file {
        tracing::debug!(path = %path.display(), "reading settings");
    }
    Ok(config::load(file.as_ref().map(|(p, _)| p.as_path()), env, flags)?)
}

fn execute(cli: Cli, env: &dyn Fn(&str) -> Option<String>) -> Result<(), CliError> {
    let mut flags = Vec::new();
    match &cli.command {
        Command::Biases | Command::RenderPrompt(_) => {}
        Command::IngestStats(a) => push(&mut flags, "dump_dir", &a.dump),
        Command::BuildCorpus(a) => {
            push(&mut flags, "dump_dir", &a.dump);
            push(&mut flags, "corpus_path", &a.out);
            push(&mut flags, "scale", &a.scale);
        }
        Command::Serve(a) => {
            a.backend.overrides(&mut flags);
            push(&mut flags, "serve.host", &a.host);
            push(&mut flags, "serve.port", &a.port);
            push(&mut flags, "serve.store", &a.store);
        }
        Command::Ask(a) => a.backend.overrides(&mut flags),
        Command::Eval(EvalCommand::Run(a)) => {
            a.backend.overrides(&mut flags);
            push(&mut flags, "eval.lexicon", &a.lexicon);
            push(&mut flags, "eval.classifier_url", &a.classifier_url);
            push(&mut flags, "eval.regard_url", &a.regard_url);
        }
        Command::Eval(_) => {}
    }
    let json = cli.json;
    match &cli.command {
        Command::Biases => biases(json),
        Command::RenderPrompt(a) => render_prompt(a, json),
        Command::IngestStats(a) => ingest_stats(&settings(&cli, env, &flags)?, a, json),
        Command::BuildCorpus(a) => build(&settings(&cli, env, &flags)?, a, json),
        Command::Serve(_) => serve(&settings(&cli, env, &flags)?, json),
        Command::Ask(a) => ask(&settings(&cli, env, &flags)?, a, json),
        Command::Eval(EvalCommand::Run(a)) => eval_run(&settings(&cli, env, &flags)?, a, json),
        Command::Eval(EvalCommand::Report(a)) => eval_report(a, json),
        Command::Eval(EvalCommand::ImportBold(a)) => import(a),
    }
}

fn ndjson<T: serde::Serialize>(out: &mut impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

fn parse_biases(ids: &[String]) -> Result<Vec<Bias>, CliError> {
    let mut out = Vec::new();
    for id in ids {
        let bias: Bias = id.parse()?;
        if !out.contains(&bias) {
            out.push(bias);
        }
    }
    Ok(out)
}

fn selected_sources(ids: &[String]) -> Result<Vec<BiasSource>, CliError> {
    let biases = parse_biases(ids)?;
    Ok(registry()
        .iter()
        .filter(|s| biases.is_empty() || biases.contains(&s.bias))
        .copied()
        .collect())
}

fn biases(json: bool) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    for e in registry_entries() {
        if json {
            ndjson(&mut out, &e)?;
        } else {
            writeln!(out, "{:<15} {:<15} {:<12} {:<20} {:>6}", e.bias.id(), e.display_name, e.category.as_str(), e.subreddit, e.quota)?;
        }
    }
    Ok(())
}

fn render_prompt(a: &RenderArgs, json: bool) -> Result<(), CliError> {
    let subreddit = match (&a.bias, &a.subreddit) {
        (Some(id), _) => id.parse::<Bias>()?.serving_subreddit().to_string(),
        (None, Some(s)) => s.clone(),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let text = match &a.response {
        None => render_inference(&subreddit, &a.instruction)?.text,
        Some(r) => render_training(&subreddit, &a.instruction, r)?,
    };
    let mut out = io::stdout().lock();
    if json {
        ndjson(&mut out, &json!({"subreddit": subreddit, "prompt": text}))?;
    } else {
        // Exact bytes, no trailing newline.
        out.write_all(text.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn ingest_stats(cfg: &Config, a: &IngestArgs, json: bool) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    for source in selected_sources(&a.biases)? {
        for kind in [RecordKind::Submissions, RecordKind::Comments] {
            let path = dump_file(&cfg.dump_dir, source.subreddit, kind).map_err(|expected| {
                CliError::Failed(format!("missing dump for r/{}: expected {}", source.subreddit, expected.display()))
            })?;
            let stats: IngestStats = match kind {
                RecordKind::Submissions => {
                    let mut s = stream_submissions(&path, a.strict).map_err(|e| CliError::Failed(e.to_string()))?;
                    for r in s.by_ref() {
                        r.map_err(|e| CliError::Failed(e.to_string()))?;
                    }
                    s.into_stats()
                }
                RecordKind::Comments => {
                    let mut s = stream_comments(&path, a.strict).map_err(|e| CliError::Failed(e.to_string()))?;
                    for r in s.by_ref() {
                        r.map_err(|e| CliError::Failed(e.to_string()))?;
                    }
                    s.into_stats()
                }
            };
            let kind_name = kind.file_stem_suffix();
            if json {
                ndjson(&mut out, &json!({"subreddit": source.subreddit, "kind": kind_name, "path": path, "stats": stats}))?;
            } else {
                let reasons: Vec<String> = stats.skip_reasons.iter().map(|(k, v)| format!("{k}={v}")).collect();
                writeln!(
                    out,
                    "{:<20} {:<12} lines={} ok={} skipped={} {}",
                    source.subreddit,
                    kind_name,
                    stats.lines_read,
                    stats.records_ok,
                    stats.records_skipped,
                    reasons.join(" ")
                )?;
            }
        }
    }
    Ok(())
}

fn build(cfg: &Config, a: &BuildArgs, json: bool) -> Result<(), CliError> {
    let sources = selected_sources(&a.biases)?;
    let options = BuildOptions {
        scale: cfg.scale,
        strict: a.strict,
    };
    let started = std::time::Instant::now();
    let build = build_corpus(&sources, &cfg.dump_dir, &options)?;
    write_corpus(&build.pairs, &cfg.corpus_path)?;
    if let Some(path) = &a.report {
        let file = File::create(path).map_err(io_at(path))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &report_document(&build.reports))
            .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    }
    let mut out = io::stdout().lock();
    for r in &build.reports {
        if json {
            ndjson(&mut out, r)?;
        } else {
            let f = &r.filters;
            writeln!(
                out,
                "{:<20} {:<15} kept {:>6} of quota {:>6} (posts {}, replies {}, dropped {}, over quota {})",
                r.subreddit,
                r.bias.id(),
                f.emitted,
                f.quota,
                f.posts_read,
                f.responses_read,
                f.responses_dropped(),
                f.over_quota
            )?;
        }
    }
    eprintln!(
        "wrote {} pairs to {} in {:.2?}",
        build.pairs.len(),
        cfg.corpus_path.display(),
        started.elapsed()
    );
    Ok(())
}

/// The generator named by the settings.
pub fn make_backend(cfg: &Config) -> Result<Arc<dyn Generator>, CliError> {
    match cfg.backend_kind()? {
        BackendKind::Retrieval => {
            let pairs = read_corpus(&cfg.corpus_path)?;
            tracing::info!(pairs = pairs.len(), path = %cfg.corpus_path.display(), "corpus loaded");
            Ok(Arc::new(RetrievalBackend::new(CorpusIndex::build(pairs))))
        }
        BackendKind::Remote => Ok(Arc::new(RemoteBackend::new(cfg.remote_config())?)),
    }
}

fn gateway_config(cfg: &Config) -> GatewayConfig {
    GatewayConfig {
        fan_out: cfg.serve.fan_out,
        per_bias_timeout: Duration::from_secs_f64(cfg.serve.per_bias_timeout_secs),
        params: cfg.generation_params(),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn serve(cfg: &Config, json: bool) -> Result<(), CliError> {
    let backend = make_backend(cfg)?;
    let store = Store::open(&cfg.serve.store)?;
    let gateway = Arc::new(Gateway::new(backend, store, gateway_config(cfg)));
    runtime()?.block_on(async {
        let addr = format!("{}:{}", cfg.serve.host, cfg.serve.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Failed(format!("cannot bind {addr}: {e}")))?;
        let local = listener.local_addr()?;
        if json {
            let mut out = io::stdout().lock();
            ndjson(&mut out, &json!({"listening": format!("http://{local}")}))?;
            out.flush()?;
        }
        eprintln!("listening on http://{local}");
        tokio::select! {
            r = opinion_server::serve(listener, gateway) => r.map_err(CliError::from),
            _ = tokio::signal::ctrl_c() => {
                eprintln!("shutting down");
                Ok(())
            }
        }
    })
}

fn ask(cfg: &Config, a: &AskArgs, json: bool) -> Result<(), CliError> {
    let biases = parse_biases(&a.biases)?;
    let backend = make_backend(cfg)?;
    let store = match &a.store {
        Some(p) => Store::open(p)?,
        None => Store::ephemeral(),
    };
    let gateway = Gateway::new(backend, store, gateway_config(cfg));
    let request = AskRequest::new(a.question.clone(), &biases);
    let response = runtime()?.block_on(gateway.ask(request))?;

    let mut out = io::stdout().lock();
    for answer in &response.answers {
        if json {
            ndjson(&mut out, answer)?;
            continue;
        }
        writeln!(out, "[{} · r/{}]", answer.bias.display_name(), answer.subreddit_used)?;
        match answer.status {
            AnswerStatus::Ok => writeln!(out, "{}\n", answer.text)?,
            AnswerStatus::Error => writeln!(out, "error: {}\n", answer.error_detail.as_deref().unwrap_or("unknown"))?,
        }
    }
    if response.answers.iter().all(|a| a.status == AnswerStatus::Error) {
        return Err(CliError::Failed("every bias failed to answer".into()));
    }
    Ok(())
}

fn classifiers(cfg: &Config) -> Result<Classifiers, CliError> {
    let timeout = Duration::from_secs_f64(cfg.backend.timeout_secs);
    let remote = |url: &str| -> Result<Arc<dyn Classifier>, CliError> {
        Ok(Arc::new(RemoteClassifier::new(url, timeout).map_err(|e| CliError::Failed(e.to_string()))?))
    };
    if let Some(url) = &cfg.eval.classifier_url {
        let sentiment = remote(url)?;
        let regard = match &cfg.eval.regard_url {
            Some(r) => remote(r)?,
            None => sentiment.clone(),
        };
        return Ok(Classifiers { regard, sentiment });
    }
    let Some(path) = &cfg.eval.lexicon else {
        return Err(CliError::Invalid("eval needs --lexicon or --classifier-url".into()));
    };
    let lexicon = Lexicon::load(path).map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(Classifiers::shared(Arc::new(LexiconClassifier::new(lexicon))))
}

fn eval_run(cfg: &Config, a: &EvalRunArgs, json: bool) -> Result<(), CliError> {
    let prompts = read_prompts(&a.prompts)?;
    let biases = if a.biases.is_empty() { Bias::ALL.to_vec() } else { parse_biases(&a.biases)? };
    let classifiers = classifiers(cfg)?;
    let backend = make_backend(cfg)?;
    let params = cfg.generation_params();
    let run = runtime()?.block_on(run_eval(&biases, &prompts, backend.as_ref(), &classifiers, &params, cfg.eval.parallelism))?;

    if let Some(path) = &a.log {
        let mut w = BufWriter::new(File::create(path).map_err(io_at(path))?);
        for record in &run.log {
            ndjson(&mut w, record).map_err(io_at(path))?;
        }
        w.flush().map_err(io_at(path))?;
    }
    match &a.out {
        Some(path) => {
            let file = File::create(path).map_err(io_at(path))?;
            serde_json::to_writer_pretty(BufWriter::new(file), &run)
                .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        }
        None if !json => {
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &run).map_err(|e| CliError::Failed(e.to_string()))?;
            writeln!(out)?;
        }
        None => {}
    }
    if json {
        let mut out = io::stdout().lock();
        for cell in &run.cells {
            ndjson(&mut out, cell)?;
        }
    }
    eprintln!("{} samples, {} skipped", run.total, run.skipped);
    if run.degraded {
        eprintln!("warning: more than 10% of samples were skipped; results are degraded");
    }
    Ok(())
}

fn eval_report(a: &EvalReportArgs, json: bool) -> Result<(), CliError> {
    let format: ReportFormat = a.format.parse().map_err(CliError::Invalid)?;
    let text = std::fs::read_to_string(&a.run).map_err(io_at(&a.run))?;
    let run: EvalRun =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", a.run.display())))?;
    let mut out = io::stdout().lock();
    if json {
        for cell in &run.cells {
            ndjson(&mut out, cell)?;
        }
        return Ok(());
    }
    out.write_all(render_report(&run.cells, format)?.as_bytes())?;
    Ok(())
}

fn import(a: &ImportBoldArgs) -> Result<(), CliError> {
    let prompts = import_bold(&a.dir)?;
    match &a.out {
        Some(path) => write_prompts(&prompts, BufWriter::new(File::create(path).map_err(io_at(path))?)).map_err(io_at(path))?,
        None => write_prompts(&prompts, io::stdout().lock())?,
    }
    eprintln!("imported {} prompts", prompts.len());
    Ok(())
}

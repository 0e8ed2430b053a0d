//! Command-line front end: run experiments, ingest prior data, analyse,
//! compare and render reports under a single data directory.
//!
//! Layout under `--data-dir`:
//!
//! ```text
//! datasets/<LABEL>.jsonl          trial records, one dataset per file
//! analysis/analysis.json          output of `analyze`
//! analysis/comparison_A_B.json    output of `compare`
//! reports/                        tables and figures from `report`
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use backprobe::analysis::{analyze, compare_datasets, AnalysisOptions, AnalysisReport, ComparisonReport};
use backprobe::clock::{Clock, FixedClock, SystemClock};
use backprobe::corpus::load_corpus;
use backprobe::extract::lexicon_listing;
use backprobe::report::{render_all, render_tables, Format, RenderSpec, ReportInputs};
use backprobe::runner::{ingest_external, read_dataset, run_experiment, write_dataset, IngestMapping, RunConfig};
use backprobe::translate::live::{DEFAULT_AUTH_KEY_ENV, DEFAULT_ENDPOINT};
use backprobe::translate::{
    DeeplClient, LanguageTable, RateLimiter, RecordingBackend, ReplayMode, Translator,
};
use backprobe::{Dataset, DEFAULT_K};

#[derive(Debug, Parser)]
#[command(name = "backprobe", version, about = "Probe implied gender in round-trip machine translation")]
pub struct Cli {
    /// Root directory for datasets, analyses and reports.
    #[arg(long, global = true, default_value = "data")]
    pub data_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run (or resume) a round-trip translation experiment.
    Run(RunArgs),
    /// Import a previously collected dataset.
    Ingest(IngestArgs),
    /// Count tables, UCA distributions, extreme sentences and verb groups.
    Analyze(AnalyzeArgs),
    /// Compare two datasets over the same sentences.
    Compare(CompareArgs),
    /// Render tables and figures from stored analyses.
    Report(ReportArgs),
    /// Corpus utilities.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Print the pronoun lexicon with precedence.
    Lexicon,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Pivot language code or dataset label (FI, ET, HU, TR, ID/INDO).
    #[arg(long)]
    pub pivot: String,
    #[arg(long, default_value_t = 100)]
    pub trials: u32,
    #[arg(long)]
    pub seed: u64,
    /// Dataset label; defaults to the pivot's label.
    #[arg(long)]
    pub label: Option<String>,
    /// Run identifier used for resuming; defaults to `<label>-seed<seed>`.
    #[arg(long)]
    pub run_id: Option<String>,
    /// Corpus file; the shipped corpus when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Record every live answer to a new recording file.
    #[arg(long, conflicts_with_all = ["replay", "strict_replay"])]
    pub record: Option<PathBuf>,
    /// Replay from a recording; misses go live (and are appended) only if an
    /// auth key is available.
    #[arg(long, conflicts_with = "strict_replay")]
    pub replay: Option<PathBuf>,
    /// Replay from a recording; any miss aborts the run.
    #[arg(long)]
    pub strict_replay: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    pub endpoint: String,
    /// Environment variable holding the auth key.
    #[arg(long, default_value = DEFAULT_AUTH_KEY_ENV)]
    pub auth_key_env: String,
    /// Concurrent in-flight translations.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    /// Target of the back translation.
    #[arg(long, default_value = "EN-GB")]
    pub english_variant: String,
    /// Live requests per second across all workers.
    #[arg(long, default_value_t = 5.0)]
    pub rate_limit: f64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Delimited data file.
    pub path: PathBuf,
    /// TOML column mapping.
    #[arg(long)]
    pub mapping: PathBuf,
    /// Corpus to validate sentence ids against.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Skip corpus validation (dataset covers only the ids in the file).
    #[arg(long, conflicts_with = "corpus")]
    pub no_corpus: bool,
    /// Overwrite an existing dataset with the same label.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Dataset labels (comma-separated); all stored datasets when omitted.
    #[arg(long, value_delimiter = ',')]
    pub datasets: Vec<String>,
    /// Category count used to normalise UCA.
    #[arg(short, long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub min_verb_occurrences: usize,
    /// Labels left out of the extreme-sentence means.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: String,
    pub b: String,
    #[arg(short, long, default_value_t = DEFAULT_K)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Any of csv, jsonl, svg.
    #[arg(long, value_delimiter = ',', default_value = "csv,jsonl,svg")]
    pub formats: Vec<String>,
    /// Output directory; `<data-dir>/reports` when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict to these dataset labels.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    #[arg(long, default_value_t = 960)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    /// Leave the generation timestamp out of figures.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Parse a corpus file and print its shape.
    Validate {
        /// Corpus file; the shipped corpus when omitted.
        path: Option<PathBuf>,
    },
}

fn datasets_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("datasets")
}

fn analysis_dir(data_dir: &Path) -> PathBuf {
    data_dir.join("analysis")
}

fn dataset_path(data_dir: &Path, label: &str) -> PathBuf {
    datasets_dir(data_dir).join(format!("{label}.jsonl"))
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        bail!("dataset label '{label}' must be non-empty and use only letters, digits, '-' or '_'");
    }
    Ok(())
}

/// Stored dataset labels, sorted.
pub fn stored_labels(data_dir: &Path) -> Result<Vec<String>> {
    let dir = datasets_dir(data_dir);
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut labels = Vec::new();
    for entry in std::fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                labels.push(stem.to_string());
            }
        }
    }
    labels.sort();
    Ok(labels)
}

fn load_dataset(data_dir: &Path, label: &str) -> Result<Dataset> {
    let path = dataset_path(data_dir, label);
    if !path.exists() {
        let known = stored_labels(data_dir)?;
        bail!("unknown dataset '{label}' (stored: {})", if known.is_empty() { "none".into() } else { known.join(", ") });
    }
    Ok(read_dataset(&path)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn live_client(args: &RunArgs) -> Result<DeeplClient> {
    let client = DeeplClient::from_env(&args.endpoint, &args.auth_key_env)?;
    Ok(client.with_rate_limiter(RateLimiter::per_second(args.rate_limit)))
}

fn build_backend(args: &RunArgs) -> Result<(Box<dyn Translator>, Arc<dyn Clock>)> {
    let system: Arc<dyn Clock> = Arc::new(SystemClock);
    if let Some(path) = &args.strict_replay {
        let backend = RecordingBackend::open(path, ReplayMode::Strict, None, system)?;
        let clock: Arc<dyn Clock> = Arc::new(FixedClock(backend.header().created_at));
        return Ok((Box::new(backend), clock));
    }
    if let Some(path) = &args.replay {
        let has_key = std::env::var_os(&args.auth_key_env).is_some();
        if has_key {
            let live: Box<dyn Translator> = Box::new(live_client(args)?);
            let backend = RecordingBackend::open(path, ReplayMode::Hybrid, Some(live), system.clone())?;
            return Ok((Box::new(backend), system));
        }
        log::info!("{} is not set; replaying without live fallback", args.auth_key_env);
        let backend = RecordingBackend::open(path, ReplayMode::Strict, None, system)?;
        let clock: Arc<dyn Clock> = Arc::new(FixedClock(backend.header().created_at));
        return Ok((Box::new(backend), clock));
    }
    let live = live_client(args)?;
    if let Some(path) = &args.record {
        let backend = RecordingBackend::open(path, ReplayMode::Record, Some(Box::new(live)), system.clone())?;
        return Ok((Box::new(backend), system));
    }
    Ok((Box::new(live), system))
}

fn cmd_run(data_dir: &Path, args: &RunArgs) -> Result<()> {
    let table = LanguageTable::default();
    let pivot = table.resolve_pivot(&args.pivot)?;
    let english = table.resolve(&args.english_variant)?;
    if english.base() != "EN" {
        bail!("--english-variant must be an English code, got {english}");
    }
    let label = args.label.clone().unwrap_or_else(|| table.label_for(&pivot));
    check_label(&label)?;
    let corpus = load_corpus(args.corpus.as_deref())?;
    let mut config = RunConfig::new(&label, pivot, args.trials, args.seed);
    if let Some(id) = &args.run_id {
        config.run_id = id.clone();
    }
    config.english = english;
    config.workers = args.workers.max(1);
    let (backend, clock) = build_backend(args)?;
    let out = dataset_path(data_dir, &label);
    let dataset = run_experiment(&corpus, &config, backend.as_ref(), &out, clock.as_ref())?;
    println!(
        "{label}: {} records ({} failed), complete: {}, written to {}",
        dataset.records.len(),
        dataset.failed_count(),
        dataset.is_complete(),
        out.display()
    );
    Ok(())
}

fn cmd_ingest(data_dir: &Path, args: &IngestArgs) -> Result<()> {
    let mapping = IngestMapping::load(&args.mapping)?;
    check_label(&mapping.label)?;
    let corpus = if args.no_corpus { None } else { Some(load_corpus(args.corpus.as_deref())?) };
    let out = dataset_path(data_dir, &mapping.label);
    if out.exists() && !args.force {
        bail!("dataset {} already exists; pass --force to replace it", out.display());
    }
    let (dataset, report) = ingest_external(&args.path, &mapping, corpus.as_ref(), &SystemClock)?;
    write_dataset(&out, &dataset)?;
    println!(
        "{}: {} rows, {} records, complete: {}, unknown labels: {}, written to {}",
        dataset.label,
        report.rows,
        report.records,
        dataset.is_complete(),
        report.unknown_labels.values().sum::<u64>(),
        out.display()
    );
    for (label, n) in &report.unknown_labels {
        eprintln!("warning: label '{label}' not recognised ({n} rows kept as OTHER)");
    }
    Ok(())
}

fn cmd_analyze(data_dir: &Path, args: &AnalyzeArgs) -> Result<()> {
    let labels = if args.datasets.is_empty() { stored_labels(data_dir)? } else { args.datasets.clone() };
    if labels.is_empty() {
        bail!("no datasets found under {}", datasets_dir(data_dir).display());
    }
    let datasets = labels.iter().map(|l| load_dataset(data_dir, l)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Dataset> = datasets.iter().collect();
    let corpus = load_corpus(args.corpus.as_deref())?;
    let options = AnalysisOptions {
        k: args.k,
        min_verb_occurrences: args.min_verb_occurrences,
        exclude_from_extremes: args.exclude.clone(),
    };
    let report = analyze(&refs, &corpus, &options)?;
    let path = analysis_dir(data_dir).join("analysis.json");
    write_json(&path, &report)?;
    for d in &report.distributions {
        let s = &d.summary;
        println!(
            "{}: UCA min {:.3} median {:.3} mean {:.3} max {:.3}",
            d.label, s.min, s.median, s.mean, s.max
        );
    }
    if let Some(v) = &report.verb_groups {
        for (label, a) in &v.anova {
            println!("{label}: verb-group ANOVA F = {:.3}, p = {:.4}", a.f_value, a.p_value);
        }
    }
    println!("analysis written to {}", path.display());
    Ok(())
}

fn comparison_path(data_dir: &Path, a: &str, b: &str) -> PathBuf {
    analysis_dir(data_dir).join(format!("comparison_{a}_{b}.json"))
}

fn cmd_compare(data_dir: &Path, args: &CompareArgs) -> Result<()> {
    let a = load_dataset(data_dir, &args.a)?;
    let b = load_dataset(data_dir, &args.b)?;
    let report = compare_datasets(&a, &b, args.k)?;
    let path = comparison_path(data_dir, &args.a, &args.b);
    write_json(&path, &report)?;
    let spec = RenderSpec::new(&analysis_dir(data_dir), [Format::Csv])?;
    render_tables(ReportInputs { analysis: None, comparisons: std::slice::from_ref(&report) }, &spec)?;
    let show = |r: Option<f64>| r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "undefined".into());
    println!("{} vs {}: UCA r = {}, she-count r = {}", args.a, args.b, show(report.uca_r), show(report.she_r));
    println!("comparison written to {}", path.display());
    Ok(())
}

fn cmd_report(data_dir: &Path, args: &ReportArgs) -> Result<()> {
    let formats = args.formats.iter().map(|f| f.parse::<Format>()).collect::<Result<Vec<_>, _>>()?;
    let out = args.out.clone().unwrap_or_else(|| data_dir.join("reports"));
    let mut spec = RenderSpec::new(&out, formats)?;
    spec.width = args.width;
    spec.height = args.height;
    if !args.labels.is_empty() {
        spec.labels = Some(args.labels.clone());
    }
    if !args.no_timestamp {
        spec.timestamp = Some(SystemClock.now());
    }
    let dir = analysis_dir(data_dir);
    let analysis_file = dir.join("analysis.json");
    let analysis: Option<AnalysisReport> =
        if analysis_file.exists() { Some(read_json(&analysis_file)?) } else { None };
    let mut comparisons: BTreeMap<String, ComparisonReport> = BTreeMap::new();
    if dir.exists() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            if name.starts_with("comparison_") && name.ends_with(".json") {
                comparisons.insert(name, read_json(&path)?);
            }
        }
    }
    let comparisons: Vec<ComparisonReport> = comparisons.into_values().collect();
    let written = render_all(ReportInputs { analysis: analysis.as_ref(), comparisons: &comparisons }, &spec)?;
    if written.is_empty() {
        println!("nothing to render: run `analyze` or `compare` first");
    } else {
        println!("{} files written to {}", written.len(), out.display());
    }
    Ok(())
}

fn cmd_corpus(command: &CorpusCommand) -> Result<()> {
    match command {
        CorpusCommand::Validate { path } => {
            let corpus = load_corpus(path.as_deref())?;
            let groups = corpus.verbs_with_min_occurrences(2);
            println!(
                "{}: {} sentences, {} verbs, {} verbs on 2+ sentences",
                corpus.name,
                corpus.len(),
                corpus.verb_set.len(),
                groups.len()
            );
            for (verb, ids) in groups {
                println!("  {verb}: {ids:?}");
            }
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let data_dir = cli.data_dir.as_path();
    match &cli.command {
        Command::Run(args) => cmd_run(data_dir, args),
        Command::Ingest(args) => cmd_ingest(data_dir, args),
        Command::Analyze(args) => cmd_analyze(data_dir, args),
        Command::Compare(args) => cmd_compare(data_dir, args),
        Command::Report(args) => cmd_report(data_dir, args),
        Command::Corpus(c) => cmd_corpus(c),
        Command::Lexicon => {
            print!("{}", lexicon_listing());
            Ok(())
        }
    }
}

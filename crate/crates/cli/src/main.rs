//! `consens`: score answers, attribute them to documents and run evaluations.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 nothing to score
//! (no scorable words, no context, no usable examples), 3 scoring backend
//! failure, 4 `--strict` run with failures.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use consens::provider::LogBase;

use config::{ConfigError, Layer, OutputFormat, ProviderKind};

#[derive(Debug, Parser)]
#[command(name = "consens", version, about = "Contrastive-perplexity grounding scores for LLM answers")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Scoring backend [default: remote]
    #[arg(long, global = true, value_enum)]
    provider: Option<ProviderKind>,
    /// Completions endpoint for the remote provider
    #[arg(long, global = true)]
    scoring_url: Option<String>,
    /// Per-request timeout for remote calls [default: 30000]
    #[arg(long, global = true)]
    scoring_timeout_ms: Option<u64>,
    /// Concurrent requests allowed against the backend [default: 4]
    #[arg(long, global = true)]
    max_in_flight: Option<usize>,
    /// Model name sent to the backend
    #[arg(long, global = true)]
    model: Option<String>,
    /// Base of the logprobs the backend reports: e, 2 or 10
    #[arg(long, global = true, value_parser = |s: &str| s.parse::<LogBase>())]
    log_base: Option<LogBase>,
    /// Closed-class word list (one word per line, # comments)
    #[arg(long, global = true)]
    stoplist: Option<PathBuf>,
    /// Training text for the reference provider, one passage per line
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Add-alpha smoothing constant of the reference provider [default: 1]
    #[arg(long, global = true)]
    reference_alpha: Option<f64>,
    /// Embeddings endpoint for the similarity baseline
    #[arg(long, global = true)]
    embedding_url: Option<String>,
    #[arg(long, global = true)]
    embedding_model: Option<String>,
    /// Output format [default: json]
    #[arg(long, global = true, value_enum)]
    output: Option<OutputFormat>,
    /// Worker pool size for evaluations [default: provider in-flight cap]
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Reserved. Every code path is deterministic, so this has no effect yet.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one answer against its context
    Score(ScoreArgs),
    /// Find which document an answer relies on most (leave-one-out)
    Attribute(AttributeArgs),
    /// Run an experiment over a JSONL dataset
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write a synthetic corpus and datasets for the reference provider
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    question: String,
    #[arg(long)]
    answer: String,
    /// File holding the whole context
    #[arg(long, conflicts_with = "document")]
    context_file: Option<PathBuf>,
    /// One context document; repeat for several
    #[arg(long)]
    document: Vec<String>,
    /// Also print per-word perplexities under both conditions
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct AttributeArgs {
    /// JSON example with question, answer and documents; `-` or absent reads stdin
    input: Option<PathBuf>,
    /// Also score the answer with every document present
    #[arg(long)]
    with_full_context: bool,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Compare two conditions per record (vary_answer or vary_context)
    Pairwise(EvalArgs),
    /// Leave-one-out attribution against a known correct document
    Attribution(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Similarity,
}

#[derive(Debug, Args)]
struct EvalArgs {
    dataset: PathBuf,
    /// Where to write the JSON report [default: stdout]
    #[arg(long)]
    report: Option<PathBuf>,
    /// Where to write per-example scores as CSV
    #[arg(long)]
    per_example: Option<PathBuf>,
    /// Exit with code 4 if any line or example failed
    #[arg(long)]
    strict: bool,
    /// Also run a baseline (pairwise only)
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory, created if missing
    out_dir: PathBuf,
    #[arg(long, default_value_t = 250)]
    records: usize,
    /// Documents per attribution record
    #[arg(long, default_value_t = 3)]
    documents: usize,
    /// Seed of the generated world
    #[arg(long, default_value_t = 0)]
    generator_seed: u64,
}

impl GlobalArgs {
    fn layer(&self) -> Layer {
        Layer {
            provider: self.provider,
            scoring_url: self.scoring_url.clone(),
            scoring_timeout_ms: self.scoring_timeout_ms,
            max_in_flight: self.max_in_flight,
            model: self.model.clone(),
            log_base: self.log_base,
            stoplist: self.stoplist.clone(),
            corpus: self.corpus.clone(),
            reference_alpha: self.reference_alpha,
            embedding_url: self.embedding_url.clone(),
            embedding_model: self.embedding_model.clone(),
            output: self.output,
            workers: self.workers,
        }
    }

    fn resolve(&self) -> Result<config::CliConfig, ConfigError> {
        if self.max_in_flight == Some(0) || self.workers == Some(0) {
            return Err(ConfigError::InvalidValue {
                source_name: "command line".into(),
                key: if self.workers == Some(0) { "workers" } else { "max_in_flight" }.into(),
                value: "0".into(),
                message: "must be at least 1".into(),
            });
        }
        let env = Layer::from_env(|k| std::env::var(k).ok())?;
        let file = match &self.config {
            Some(path) => Layer::from_file(path)?,
            None => Layer::default(),
        };
        let api_key = std::env::var(config::API_KEY_ENV).ok();
        Ok(config::CliConfig::resolve(self.layer(), env, file, api_key))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

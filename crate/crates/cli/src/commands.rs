use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use consens::harness::{
    load_dataset_lenient, run_attribution, run_pairwise, similarity_baseline, AttributionRecord,
    ConSensScorer, Failure, HarnessError, LineFailure, PairwiseRecord, Record, RunConfig,
};
use consens::provider::{train_reference_lm, HttpConfig, RemoteEmbedder, RemoteScorer};
use consens::scorer::join_documents;
use consens::synthetic::SyntheticWorld;
use consens::textproc::TextError;
use consens::{
    attribute_documents, score_example, AttributionResult, ConSensResult, FilterConfig,
    ProviderError, QaExample, ScoreError, ScoringProvider,
};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::config::{CliConfig, ConfigError, OutputFormat, ProviderKind};
use crate::{AttributeArgs, Baseline, Cli, Command, EvalArgs, EvalCommand, ScoreArgs, SynthArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("strict mode: {0}")]
    Strict(String),
}

fn provider_code(e: &ProviderError) -> u8 {
    match e {
        ProviderError::Unavailable { .. }
        | ProviderError::TokenizationMismatch(_)
        | ProviderError::MalformedResponse(_) => 3,
        _ => 1,
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Io { .. } => 1,
            CliError::Score(e) => match e {
                ScoreError::EmptyContext | ScoreError::NoScorableWords { .. } => 2,
                ScoreError::Provider(p) => provider_code(p),
                ScoreError::Text(_) | ScoreError::Metric(_) => 3,
                ScoreError::InvalidExample(_) => 1,
            },
            CliError::Provider(p) => provider_code(p),
            CliError::Harness(e) => match e {
                HarnessError::NoUsableExamples | HarnessError::Stats(_) => 2,
                _ => 1,
            },
            CliError::Strict(_) => 4,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = cli.global.resolve()?;
    if cli.global.seed.is_some() {
        log::debug!("--seed is reserved and currently ignored");
    }
    match cli.command {
        Command::Score(args) => score(&config, args),
        Command::Attribute(args) => attribute(&config, args),
        Command::Eval(EvalCommand::Pairwise(args)) => eval_pairwise(&config, args),
        Command::Eval(EvalCommand::Attribution(args)) => eval_attribution(&config, args),
        Command::Synth(args) => synth(args),
    }
}

fn filter(config: &CliConfig) -> Result<FilterConfig, CliError> {
    match &config.stoplist_path {
        Some(path) => FilterConfig::from_stoplist_file(path)
            .map_err(|e: TextError| CliError::Usage(e.to_string())),
        None => Ok(FilterConfig::default()),
    }
}

fn http_config(config: &CliConfig, url: &str) -> HttpConfig {
    let mut http = HttpConfig::new(url);
    http.api_key = config.api_key.clone();
    http.timeout = Duration::from_millis(config.scoring_timeout_ms);
    http.max_in_flight = config.max_in_flight;
    http
}

fn provider(config: &CliConfig) -> Result<Box<dyn ScoringProvider>, CliError> {
    config.check_provider()?;
    match config.provider_kind {
        ProviderKind::Remote => {
            let url = config.scoring_url.as_deref().expect("checked above");
            let mut scorer = RemoteScorer::new(http_config(config, url))?.with_log_base(config.log_base);
            if let Some(model) = &config.model {
                scorer = scorer.with_model(model.clone());
            }
            Ok(Box::new(scorer))
        }
        ProviderKind::Reference => {
            let path = config.reference_corpus_path.as_ref().expect("checked above");
            let text = fs::read_to_string(path).map_err(io_err(format!("reading corpus {}", path.display())))?;
            let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
            let lm = train_reference_lm(&lines, config.reference_alpha)?;
            Ok(Box::new(lm))
        }
    }
}

fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(io_err("writing to stdout"))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn score(config: &CliConfig, args: ScoreArgs) -> Result<(), CliError> {
    if args.question.trim().is_empty() || args.answer.trim().is_empty() {
        return Err(CliError::Usage("--question and --answer must not be empty".into()));
    }
    let documents = match &args.context_file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
            vec![text.trim_end().to_string()]
        }
        None => args.document.clone(),
    };
    let documents: Vec<String> = documents.into_iter().filter(|d| !d.trim().is_empty()).collect();
    let example = QaExample::new("cli", &args.question, documents, &args.answer);
    let provider = provider(config)?;
    let result = score_example(&example, &provider, &filter(config)?)?;

    let table = args.verbose.then(|| word_table(&join_documents(&example.documents), &result));
    match config.output_format {
        OutputFormat::Json => print_stdout(&to_json(&result))?,
        OutputFormat::Csv => print_stdout(&format!(
            "score,r,log_p_empty,log_p_context,token_count\n{},{},{},{},{}\n",
            result.score,
            result.r,
            result.log_p_empty.value,
            result.log_p_context.value,
            result.log_p_context.token_count
        ))?,
        OutputFormat::Text => {
            let mut s = summary_text(&result);
            if let Some(t) = &table {
                s.push('\n');
                s.push_str(t);
            }
            print_stdout(&s)?;
        }
    }
    // machine formats keep stdout parseable
    if let (Some(t), OutputFormat::Json | OutputFormat::Csv) = (&table, config.output_format) {
        eprint!("{t}");
    }
    Ok(())
}

fn summary_text(r: &ConSensResult) -> String {
    format!(
        "score          {:.4}\nr              {:.4}\nlog_p_empty    {:.4}  ({} tokens)\nlog_p_context  {:.4}  ({} tokens)\n",
        r.score,
        r.r,
        r.log_p_empty.value,
        r.log_p_empty.token_count,
        r.log_p_context.value,
        r.log_p_context.token_count
    )
}

fn one_line(text: &str, max: usize) -> String {
    let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= max {
        flat
    } else {
        let cut: String = flat.chars().take(max - 3).collect();
        format!("{cut}...")
    }
}

/// Context column, one column per retained word, then the score on the
/// context row only.
pub fn word_table(context: &str, r: &ConSensResult) -> String {
    let mut header = vec!["Context".to_string()];
    header.extend(r.word_details.iter().map(|w| format!("\"{}\"", w.word)));
    header.push("ConSens".into());
    let mut empty = vec!["(empty)".to_string()];
    empty.extend(r.word_details.iter().map(|w| format!("{:.2}", w.log_empty.exp())));
    empty.push(String::new());
    let mut with = vec![one_line(context, 48)];
    with.extend(r.word_details.iter().map(|w| format!("{:.2}", w.log_context.exp())));
    with.push(format!("{:.2}", r.score));

    let rows = [header, empty, with];
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
    }
    out
}

#[derive(Debug, Deserialize)]
struct AttributeInput {
    #[serde(default)]
    id: String,
    question: String,
    answer: String,
    documents: Vec<String>,
}

fn read_input(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).map_err(io_err(format!("reading {}", p.display())))
        }
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(io_err("reading stdin"))?;
            Ok(s)
        }
    }
}

fn attribute(config: &CliConfig, args: AttributeArgs) -> Result<(), CliError> {
    let text = read_input(args.input.as_deref())?;
    let input: AttributeInput =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid example JSON: {e}")))?;
    let example = QaExample::new(input.id, input.question, input.documents, input.answer);
    let provider = provider(config)?;
    let result = attribute_documents(&example, &provider, &filter(config)?, args.with_full_context)?;
    print_stdout(&match config.output_format {
        OutputFormat::Json => to_json(&result),
        OutputFormat::Csv => attribution_csv(&result),
        OutputFormat::Text => attribution_text(&result),
    })
}

fn attribution_csv(r: &AttributionResult) -> String {
    let mut s = String::from("document_index,score_without,r,log_p_empty,log_p_context,most_influential\n");
    for d in &r.per_document_scores {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.document_index,
            d.result.score,
            d.result.r,
            d.result.log_p_empty.value,
            d.result.log_p_context.value,
            d.document_index == r.most_influential_index
        ));
    }
    s
}

fn attribution_text(r: &AttributionResult) -> String {
    let mut s = String::new();
    for d in &r.per_document_scores {
        let mark = if d.document_index == r.most_influential_index { "  <- most influential" } else { "" };
        s.push_str(&format!("without document {}: {:.4}{mark}\n", d.document_index, d.result.score));
    }
    if let Some(full) = &r.full_context_score {
        s.push_str(&format!("all documents: {:.4}\n", full.score));
    }
    s
}

fn load<R: Record>(path: &Path) -> Result<(Vec<R>, Vec<LineFailure>), CliError> {
    let (records, bad) = load_dataset_lenient::<R>(path)?;
    for f in &bad {
        eprintln!("warning: {}: skipping line {}: {}", path.display(), f.line, f.error);
    }
    Ok((records, bad))
}

fn line_failures(bad: &[LineFailure]) -> Vec<Failure> {
    bad.iter()
        .map(|f| Failure {
            id: format!("line {}", f.line),
            error: f.error.to_string(),
        })
        .collect()
}

fn write_file(path: &PathBuf, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
    let mut w = BufWriter::new(file);
    write(&mut w)?;
    w.flush().map_err(io_err(format!("writing {}", path.display())))
}

fn emit_report(report: &Value, args: &EvalArgs) -> Result<(), CliError> {
    let text = to_json(report);
    match &args.report {
        Some(path) => write_file(path, |w| {
            w.write_all(text.as_bytes()).map_err(io_err(format!("writing {}", path.display())))
        }),
        None => print_stdout(&text),
    }
}

fn strict_check(args: &EvalArgs, failures: usize) -> Result<(), CliError> {
    if args.strict && failures > 0 {
        return Err(CliError::Strict(format!("{failures} line(s) or example(s) failed")));
    }
    Ok(())
}

fn eval_pairwise(config: &CliConfig, args: EvalArgs) -> Result<(), CliError> {
    let (records, bad) = load::<PairwiseRecord>(&args.dataset)?;
    let run = RunConfig { workers: config.workers };
    let embedder = match args.baseline {
        Some(Baseline::Similarity) => {
            let url = config.embedding_url.as_deref().ok_or(ConfigError::MissingEmbeddingUrl)?;
            let mut e = RemoteEmbedder::new(http_config(config, url))?;
            if let Some(m) = &config.embedding_model {
                e = e.with_model(m.clone());
            }
            Some(e)
        }
        None => None,
    };
    let scorer = ConSensScorer::new(provider(config)?, filter(config)?);
    let mut report = run_pairwise(&records, &scorer, &run)?;
    report.failures.extend(line_failures(&bad));
    eprintln!(
        "pairwise: {} scored, {} failed, ROC AUC {:.4}",
        report.n_examples,
        report.failures.len(),
        report.stats.roc_auc
    );
    let mut value = serde_json::to_value(&report).expect("reports serialize");
    let mut failures = report.failures.len();
    if let Some(embedder) = embedder {
        let baseline = similarity_baseline(&records, embedder, &run)?;
        eprintln!("similarity baseline: ROC AUC {:.4}", baseline.stats.roc_auc);
        failures += baseline.failures.len();
        value["baseline"] = serde_json::to_value(&baseline).expect("reports serialize");
    }
    emit_report(&value, &args)?;
    if let Some(path) = &args.per_example {
        write_file(path, |w| report.write_csv(w).map_err(CliError::from))?;
    }
    strict_check(&args, failures)
}

fn eval_attribution(config: &CliConfig, args: EvalArgs) -> Result<(), CliError> {
    if args.baseline.is_some() {
        return Err(CliError::Usage("--baseline is only available for `eval pairwise`".into()));
    }
    let (records, bad) = load::<AttributionRecord>(&args.dataset)?;
    let scorer = ConSensScorer::new(provider(config)?, filter(config)?);
    let mut report = run_attribution(&records, &scorer, &RunConfig { workers: config.workers })?;
    report.failures.extend(line_failures(&bad));
    eprintln!(
        "attribution: {} scored, {} failed, hit rate {:.4}",
        report.n_examples,
        report.failures.len(),
        report.hit_rate
    );
    emit_report(&serde_json::to_value(&report).expect("reports serialize"), &args)?;
    if let Some(path) = &args.per_example {
        write_file(path, |w| report.write_csv(w).map_err(CliError::from))?;
    }
    strict_check(&args, report.failures.len())
}

fn write_jsonl<T: serde::Serialize>(path: &PathBuf, rows: &[T]) -> Result<(), CliError> {
    write_file(path, |w| {
        for row in rows {
            serde_json::to_writer(&mut *w, row).expect("records serialize");
            w.write_all(b"\n").map_err(io_err(format!("writing {}", path.display())))?;
        }
        Ok(())
    })
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    if args.documents < 2 {
        return Err(CliError::Usage("--documents must be at least 2".into()));
    }
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    let world = SyntheticWorld::new(args.generator_seed);

    let corpus = dir.join("corpus.txt");
    write_file(&corpus, |w| {
        for line in world.corpus() {
            writeln!(w, "{line}").map_err(io_err(format!("writing {}", corpus.display())))?;
        }
        Ok(())
    })?;
    let vary_answer = dir.join("vary_answer.jsonl");
    write_jsonl(&vary_answer, &world.pairwise_vary_answer(args.records))?;
    let vary_context = dir.join("vary_context.jsonl");
    write_jsonl(&vary_context, &world.pairwise_vary_context(args.records))?;
    let attribution = dir.join("attribution.jsonl");
    write_jsonl(&attribution, &world.attribution(args.records, args.documents))?;

    let paths = serde_json::json!({
        "corpus": corpus,
        "vary_answer": vary_answer,
        "vary_context": vary_context,
        "attribution": attribution,
    });
    print_stdout(&to_json(&paths))
}

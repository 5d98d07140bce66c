//! `laysumm`: score, select, rank exemplars and build prompts from the shell.
//!
//! Exit codes: 0 success, 1 validation error, 2 scorer error, 3 I/O error.

mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use laysumm::corpus::{
    load_candidates, load_corpus, load_results, write_jsonl, Dataset, Document, Loaded,
    MetricsRecord, ResultRecord,
};
use laysumm::des::selection_presets;
use laysumm::fewshot::{rank_examples, top_k, FewShotConfig, RankMode};
use laysumm::pipeline::{score_candidates, select_documents, RunOptions, SourceField};
use laysumm::prompt::{
    builtin_formats, inference_presets, load_chat_formats, FewShotBundle, PromptTemplate,
    TemplateName,
};
use laysumm::scorer::mock::{serve, MockFormula, ServeOptions};
use laysumm::{Error, ErrorClass, Result};

use config::{selection_config, Common, CommonFlags, FileConfig};

#[derive(Debug, Parser)]
#[command(
    name = "laysumm",
    version,
    about = "Lay-summary evaluation and selection"
)]
struct Cli {
    /// Optional TOML file with defaults for any command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute readability, ROUGE and scorer metrics for every candidate.
    Score(ScoreArgs),
    /// Pick the best candidate per document.
    Select(SelectArgs),
    /// Rank training examples for few-shot prompting.
    RankExamples(RankArgs),
    /// Render zero-shot prompts or few-shot conversations.
    BuildPrompt(PromptArgs),
    /// Print the built-in selection, few-shot and inference presets.
    Presets,
    /// Serve a mock scorer on stdin/stdout.
    #[command(hide = true)]
    ServeMock(ServeMockArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Dataset the corpus comes from.
    #[arg(long)]
    dataset: Option<Dataset>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Scorer registry (TOML). Falls back to $LAYSUMM_SCORERS.
    #[arg(long)]
    scorers: Option<PathBuf>,
    /// Drop unreachable scorers with a warning instead of failing.
    #[arg(long)]
    skip_missing: bool,
    /// Skip bad records and failed metrics with a warning.
    #[arg(long)]
    lenient: bool,
    /// Text sent to scorers as the source.
    #[arg(long)]
    source: Option<SourceField>,
    /// Stem tokens (Porter2) before computing ROUGE.
    #[arg(long)]
    stemming: bool,
    /// Separator between sections in shared-task article bodies.
    #[arg(long)]
    section_delimiter: Option<String>,
    /// Familiar-word list for DCRS, one word per line.
    #[arg(long)]
    word_list: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(&self, file: &FileConfig) -> Result<Common> {
        Common::resolve(
            CommonFlags {
                dataset: self.dataset,
                jobs: self.jobs,
                skip_missing: self.skip_missing,
                lenient: self.lenient,
                source: self.source,
                stemming: self.stemming,
                section_delimiter: self.section_delimiter.as_deref(),
                word_list: self.word_list.as_deref(),
                scorers: self.scorers.as_deref(),
            },
            file,
        )
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct SelectArgs {
    /// Output of `score`; when absent, metrics are computed from
    /// --corpus and --candidates.
    #[arg(long, conflicts_with_all = ["corpus", "candidates"])]
    metrics: Option<PathBuf>,
    #[arg(long, requires = "candidates")]
    corpus: Option<PathBuf>,
    #[arg(long, requires = "corpus")]
    candidates: Option<PathBuf>,
    /// Weight preset.
    #[arg(long)]
    preset: Option<Dataset>,
    #[arg(long)]
    w_readability: Option<f64>,
    #[arg(long)]
    w_factuality: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Training corpus with lay summaries.
    #[arg(long)]
    corpus: PathBuf,
    /// How normalized metrics are averaged.
    #[arg(long)]
    rank_mode: Option<RankMode>,
    /// Number of exemplars; the dataset preset when absent.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct PromptArgs {
    /// Documents to build prompts for.
    #[arg(long)]
    corpus: PathBuf,
    /// initial, article_llama, persona, intro or guide.
    #[arg(long)]
    template: Option<String>,
    /// Custom template file instead of a bundled one.
    #[arg(long, conflicts_with = "template")]
    template_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "few_shot")]
    zero_shot: bool,
    #[arg(long, requires = "ranking")]
    few_shot: bool,
    /// Output of `rank-examples`.
    #[arg(long)]
    ranking: Option<PathBuf>,
    /// Corpus the ranked exemplars come from; defaults to --corpus.
    #[arg(long)]
    exemplars: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    /// Take k from this dataset's preset.
    #[arg(long, conflicts_with = "k")]
    k_from_preset: Option<Dataset>,
    /// Chat format name.
    #[arg(long)]
    format: Option<String>,
    /// Chat format file (TOML) to use instead of the bundled formats.
    #[arg(long)]
    formats: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Args)]
struct ServeMockArgs {
    #[arg(long)]
    formula: String,
    #[arg(long)]
    exit_after: Option<usize>,
    #[arg(long)]
    delay_ms: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("LAYSUMM_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .without_time()
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let summary = json!({
                "error": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{summary}");
            ExitCode::from(match e.class() {
                ErrorClass::Validation => 1,
                ErrorClass::Scorer => 2,
                ErrorClass::Io => 3,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Score(args) => cmd_score(args, &file),
        Command::Select(args) => cmd_select(args, &file),
        Command::RankExamples(args) => cmd_rank(args, &file),
        Command::BuildPrompt(args) => cmd_build_prompt(args, &file),
        Command::Presets => cmd_presets(),
        Command::ServeMock(args) => cmd_serve_mock(args),
    }
}

fn report_rejects<T>(what: &str, loaded: Loaded<T>) -> Vec<T> {
    if !loaded.rejected.is_empty() {
        tracing::warn!("skipped {} bad {what} records", loaded.rejected.len());
    }
    loaded.records
}

fn load_docs(path: &Path, common: &Common) -> Result<Vec<Document>> {
    Ok(report_rejects(
        "corpus",
        load_corpus(path, &common.corpus_options())?,
    ))
}

fn emit(out: Option<&Path>, records: &[ResultRecord]) -> Result<()> {
    match out {
        Some(path) => write_jsonl(path, records),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let written = records.iter().try_for_each(|r| {
                let line = serde_json::to_string(r).expect("records serialize");
                writeln!(lock, "{line}")
            });
            match written.and_then(|_| lock.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Error::io("<stdout>", e))
                }
                _ => Ok(()),
            }
        }
    }
}

fn compute_metrics(
    corpus: &Path,
    candidates: &Path,
    common: &Common,
    options: &RunOptions,
) -> Result<Vec<MetricsRecord>> {
    let docs = load_docs(corpus, common)?;
    let cands = report_rejects(
        "candidate",
        load_candidates(candidates, common.load_mode())?,
    );
    let registry = common.registry()?;
    let out = score_candidates(&docs, &cands, &registry, options)?;
    if out.failures > 0 {
        tracing::warn!("{} metric failures recorded", out.failures);
    }
    Ok(out.records)
}

fn registry_specs(common: &Common) -> Result<serde_json::Value> {
    let registry = common.registry()?;
    Ok(serde_json::to_value(registry.specs()).expect("specs serialize"))
}

fn cmd_score(args: ScoreArgs, file: &FileConfig) -> Result<()> {
    let common = args.common.resolve(file)?;
    let options = common.run_options()?;
    let records = compute_metrics(&args.corpus, &args.candidates, &common, &options)?;
    let config = json!({
        "corpus": args.corpus,
        "candidates": args.candidates,
        "common": common,
        "scorer_registry": registry_specs(&common)?,
    });
    let mut out = vec![ResultRecord::header("score", config)];
    out.extend(records.into_iter().map(ResultRecord::Metrics));
    emit(args.common.out.as_deref(), &out)
}

fn cmd_select(args: SelectArgs, file: &FileConfig) -> Result<()> {
    let selection = selection_config(
        args.preset,
        args.w_readability,
        args.w_factuality,
        file,
        args.common.dataset,
    )?;
    let (records, input, options) = match (&args.metrics, &args.corpus, &args.candidates) {
        (Some(path), _, _) => {
            let records: Vec<MetricsRecord> = load_results(path)?
                .into_iter()
                .filter_map(|r| match r {
                    ResultRecord::Metrics(m) => Some(m),
                    _ => None,
                })
                .collect();
            let options = RunOptions {
                jobs: args.common.jobs.or(file.jobs),
                lenient: args.common.lenient || file.lenient.unwrap_or(false),
                ..Default::default()
            };
            (records, json!({ "metrics": path }), options)
        }
        (None, Some(corpus), Some(candidates)) => {
            let common = args.common.resolve(file)?;
            let options = common.run_options()?;
            let records = compute_metrics(corpus, candidates, &common, &options)?;
            let input = json!({
                "corpus": corpus,
                "candidates": candidates,
                "common": common,
                "scorer_registry": registry_specs(&common)?,
            });
            (records, input, options)
        }
        _ => {
            return Err(Error::InvalidParameter(
                "give --metrics, or --corpus with --candidates".into(),
            ))
        }
    };

    let (selections, wins) = select_documents(&records, &selection, &options)?;
    let config = json!({ "input": input, "selection": selection });
    let mut out = vec![ResultRecord::header("select", config)];
    out.extend(selections);
    emit(args.common.out.as_deref(), &out)?;

    let summary: Vec<String> = wins.iter().map(|(s, n)| format!("{s}={n}")).collect();
    eprintln!(
        "selected {} documents; wins by strategy: {}",
        wins.values().sum::<usize>(),
        if summary.is_empty() {
            "none".into()
        } else {
            summary.join(" ")
        }
    );
    Ok(())
}

fn cmd_rank(args: RankArgs, file: &FileConfig) -> Result<()> {
    let common = args.common.resolve(file)?;
    let options = common.run_options()?;
    let docs = load_docs(&args.corpus, &common)?;
    let registry = common.registry()?;
    let mode = args.rank_mode.or(file.rank_mode).unwrap_or_default();
    let fewshot = match args.k.or(file.k) {
        Some(k) => FewShotConfig::new(k, common.dataset)?,
        None => FewShotConfig::preset(common.dataset),
    };
    let ranked = rank_examples(&docs, &registry, mode, &options)?;
    let ids = top_k(&ranked, &fewshot)?;

    let config = json!({
        "corpus": args.corpus,
        "common": common,
        "rank_mode": mode,
        "fewshot": fewshot,
        "scorer_registry": registry_specs(&common)?,
    });
    let mut out = vec![ResultRecord::header("rank-examples", config)];
    out.extend(ranked.into_iter().map(|r| ResultRecord::Ranking {
        document_id: r.document_id,
        rank: r.rank,
        rank_score: r.rank_score,
    }));
    out.push(ResultRecord::TopK {
        dataset: fewshot.dataset,
        k: fewshot.k,
        document_ids: ids,
    });
    emit(args.common.out.as_deref(), &out)
}

fn ranked_ids(path: &Path) -> Result<Vec<String>> {
    let mut ranking: Vec<(usize, String)> = load_results(path)?
        .into_iter()
        .filter_map(|r| match r {
            ResultRecord::Ranking {
                document_id, rank, ..
            } => Some((rank, document_id)),
            _ => None,
        })
        .collect();
    ranking.sort();
    Ok(ranking.into_iter().map(|(_, id)| id).collect())
}

fn cmd_build_prompt(args: PromptArgs, file: &FileConfig) -> Result<()> {
    let common = args.common.resolve(file)?;
    let template = match (
        &args.template_file,
        args.template.as_deref().or(file.template.as_deref()),
    ) {
        (Some(path), _) => PromptTemplate::load(path)?,
        (None, Some(name)) => PromptTemplate::builtin(name.parse::<TemplateName>()?),
        (None, None) => PromptTemplate::builtin(TemplateName::Initial),
    };
    let docs = load_docs(&args.corpus, &common)?;

    let mut config = json!({
        "corpus": args.corpus,
        "common": common,
        "template": template.name(),
        "template_file": args.template_file,
    });
    let mut records = Vec::with_capacity(docs.len());
    let mut docs_sorted: Vec<&Document> = docs.iter().collect();
    docs_sorted.sort_by(|a, b| a.id.cmp(&b.id));

    if args.few_shot {
        let ranking = args.ranking.as_deref().expect("clap requires --ranking");
        let k = match (args.k.or(file.k), args.k_from_preset) {
            (Some(k), _) => FewShotConfig::new(k, common.dataset)?,
            (None, Some(d)) => FewShotConfig::preset(d),
            (None, None) => FewShotConfig::preset(common.dataset),
        };
        let formats = match args.formats.as_deref().or(file.formats.as_deref()) {
            Some(path) => load_chat_formats(path)?,
            None => builtin_formats(),
        };
        let format_name = args
            .format
            .as_deref()
            .or(file.format.as_deref())
            .unwrap_or("mistral-instruct");
        let format = formats.get(format_name).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown chat format {format_name:?} (available: {})",
                formats.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;

        let pool = match &args.exemplars {
            Some(path) => load_docs(path, &common)?,
            None => docs.clone(),
        };
        let ranked = ranked_ids(ranking)?;
        if ranked.len() < k.k {
            return Err(Error::InvalidParameter(format!(
                "k = {} but the ranking lists {} examples",
                k.k,
                ranked.len()
            )));
        }
        let by_id: BTreeMap<&str, &Document> = pool.iter().map(|d| (d.id.as_str(), d)).collect();
        let exemplars = ranked[..k.k]
            .iter()
            .map(|id| {
                let doc = by_id.get(id.as_str()).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "ranked exemplar {id:?} is not in the exemplar corpus"
                    ))
                })?;
                let lay = doc
                    .lay_summary
                    .as_deref()
                    .ok_or_else(|| Error::MissingField {
                        field: "lay_summary".into(),
                        document: doc.id.clone(),
                    })?;
                Ok((*doc, lay))
            })
            .collect::<Result<Vec<_>>>()?;
        let exemplar_ids: Vec<String> = exemplars.iter().map(|(d, _)| d.id.clone()).collect();

        for doc in docs_sorted {
            let bundle = FewShotBundle::build(&template, &exemplars, doc)?;
            records.push(ResultRecord::Prompt {
                document_id: doc.id.clone(),
                template: template.name().to_string(),
                exemplar_ids: exemplar_ids.clone(),
                prompt_text: bundle.render(format),
            });
        }
        config["mode"] = json!("few-shot");
        config["ranking"] = json!(ranking);
        config["exemplars"] = json!(args.exemplars);
        config["fewshot"] = json!(k);
        config["format"] = json!(format);
    } else {
        for doc in docs_sorted {
            records.push(ResultRecord::Prompt {
                document_id: doc.id.clone(),
                template: template.name().to_string(),
                exemplar_ids: Vec::new(),
                prompt_text: template.render(doc)?,
            });
        }
        config["mode"] = json!("zero-shot");
    }

    let mut out = vec![ResultRecord::header("build-prompt", config)];
    out.extend(records);
    emit(args.common.out.as_deref(), &out)
}

fn cmd_presets() -> Result<()> {
    let fewshot: BTreeMap<&str, usize> = Dataset::ALL
        .iter()
        .map(|d| (d.name(), FewShotConfig::preset(*d).k))
        .collect();
    let presets = json!({
        "selection": selection_presets(),
        "fewshot_k": fewshot,
        "inference": inference_presets(),
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&presets).expect("presets serialize")
    );
    Ok(())
}

fn cmd_serve_mock(args: ServeMockArgs) -> Result<()> {
    let formula: MockFormula = args.formula.parse()?;
    let options = ServeOptions {
        exit_after: args.exit_after,
        delay: args.delay_ms.map(Duration::from_millis),
    };
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve(formula, stdin.lock(), stdout.lock(), &options).map_err(|e| Error::io("<stdio>", e))
}

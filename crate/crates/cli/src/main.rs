//! `lamp` — build splits, audit prompts, run experiments, and score
//! predictions for LaMP-style personalization tasks.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use lamp_core::metrics::evaluate_run;
use lamp_core::model::{load_dataset, save_dataset, Dataset};
use lamp_core::prompting::{build_personalized_input, build_plain_input, PromptSettings};
use lamp_core::retrieval::{Bm25Params, HashingEmbedder, Strategy};
use lamp_core::runner::{audit_line, build_client, run_experiment, ExperimentConfig};
use lamp_core::splits::{
    filter_users, time_based_split, user_based_split, CitationPool, SplitConfig, UserHistory,
};
use lamp_core::tasks::{self, SplitRegime, TaskSpec};

#[derive(Parser)]
#[command(name = "lamp", version, about = "Retrieval-augmented personalization pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run(RunArgs),
    /// Build train/dev/test datasets from per-user histories.
    Split(SplitArgs),
    /// Emit the personalized prompt for every sample as JSON lines.
    Prompt(PromptArgs),
    /// Score a predictions file against a gold dataset.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON (see README for the schema).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    /// Task id, e.g. LaMP-2T; the U/T suffix selects the regime.
    #[arg(long)]
    task: String,
    /// User histories JSON: [{"user_id": ..., "entries": [...]}].
    #[arg(long)]
    histories: PathBuf,
    /// Directory for train.json, dev.json, test.json, manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Citation pool JSON (required for LaMP-1).
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Override the task's default minimum history size.
    #[arg(long)]
    min_profile: Option<usize>,
    /// Override the task's default maximum history size.
    #[arg(long)]
    max_profile: Option<usize>,
    /// Subsample the dev set to this many samples.
    #[arg(long)]
    dev_subsample: Option<usize>,
    /// Subsample the test set to this many samples.
    #[arg(long)]
    test_subsample: Option<usize>,
}

#[derive(Args)]
struct PromptArgs {
    #[arg(long)]
    task: String,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "bm25")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Model context size in proxy tokens.
    #[arg(long, default_value_t = 512)]
    context_len: usize,
    /// Tokens reserved for the task input.
    #[arg(long, default_value_t = 256)]
    input_reserve: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip retrieval and emit input-only prompts.
    #[arg(long)]
    no_retrieval: bool,
    /// Bucket count for the hashing embedder (embedding strategy only).
    #[arg(long, default_value_t = 64)]
    embedding_dimension: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum StrategyArg {
    Bm25,
    Recency,
    Random,
    Embedding,
}

impl From<StrategyArg> for Strategy {
    fn from(value: StrategyArg) -> Strategy {
        match value {
            StrategyArg::Bm25 => Strategy::Bm25,
            StrategyArg::Recency => Strategy::Recency,
            StrategyArg::Random => Strategy::Random,
            StrategyArg::Embedding => Strategy::Embedding,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    task: String,
    /// Predictions JSON lines: {"sample_id": ..., "prediction": ...}.
    #[arg(long)]
    predictions: PathBuf,
    /// Gold dataset file.
    #[arg(long)]
    gold: PathBuf,
    /// Where to write the metric report JSON.
    #[arg(long)]
    report: PathBuf,
    /// Where to write the flat per-sample CSV.
    #[arg(long)]
    csv: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Split(args) => cmd_split(args),
        Command::Prompt(args) => cmd_prompt(args),
        Command::Eval(args) => cmd_eval(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn load_task(task_id: &str) -> Result<TaskSpec> {
    tasks::by_id(task_id).with_context(|| format!("resolving task {task_id:?}"))
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let raw = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&raw).context("parsing experiment config")?;
    let client = build_client(&config.lm);
    let artifact = run_experiment(&config, client.as_ref())?;

    println!("task        {}", artifact.report.experiment.task_id);
    println!(
        "samples     {} scored, {} failed",
        artifact.report.n_scored, artifact.report.n_failed
    );
    for (name, value) in &artifact.report.report.metrics {
        println!("{name:<12}{value:.6}");
    }
    println!("mapped      {:.4}", artifact.report.report.mapped_fraction);
    println!("report      {}", artifact.report_path.display());
    println!("prompts     {}", artifact.prompts_path.display());
    println!("wall clock  {:.1?}", artifact.wall_clock);
    if artifact.report.n_failed > 0 {
        eprintln!("failed samples: {}", artifact.report.failed_sample_ids.join(", "));
        return Ok(1);
    }
    Ok(0)
}

fn cmd_split(args: SplitArgs) -> Result<i32> {
    let task = load_task(&args.task)?;
    let raw = fs::read_to_string(&args.histories)
        .with_context(|| format!("reading {}", args.histories.display()))?;
    let histories: Vec<UserHistory> =
        serde_json::from_str(&raw).context("parsing user histories")?;
    let pool: Option<CitationPool> = match &args.pool {
        Some(path) => {
            let raw =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str(&raw).context("parsing citation pool")?)
        }
        None => None,
    };
    if task.number == 1 && pool.is_none() {
        bail!("task {} needs --pool for citation-pair construction", task.task_id);
    }

    let mut config = SplitConfig::defaults_for(&task, args.seed);
    if let Some(v) = args.min_profile {
        config.min_profile = v;
    }
    if let Some(v) = args.max_profile {
        config.max_profile = Some(v);
    }
    config.dev_subsample = args.dev_subsample;
    config.test_subsample = args.test_subsample;

    let kept = filter_users(&histories, &config);
    println!("{} of {} users pass the history filter", kept.len(), histories.len());

    let output = match task.regime {
        SplitRegime::UserBased => user_based_split(&task, &kept, &config, pool.as_ref())?,
        SplitRegime::TimeBased => time_based_split(&task, &kept, &config, pool.as_ref())?,
    };

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (name, dataset) in
        [("train", &output.train), ("dev", &output.dev), ("test", &output.test)]
    {
        let path = args.out_dir.join(format!("{name}.json"));
        save_dataset(dataset, &path)?;
        println!("{name:<6}{:>6} samples -> {}", dataset.samples.len(), path.display());
    }
    let manifest_path = args.out_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&output.manifest)?)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    println!("manifest    -> {}", manifest_path.display());
    Ok(0)
}

fn cmd_prompt(args: PromptArgs) -> Result<i32> {
    let task = load_task(&args.task)?;
    let dataset = load_dataset(&args.dataset, &task)?;
    let embedder = HashingEmbedder::new(args.embedding_dimension);

    let mut lines = Vec::with_capacity(dataset.samples.len());
    for sample in &dataset.samples {
        let prompt = if args.no_retrieval {
            build_plain_input(&task, &sample.input, args.input_reserve)?
        } else {
            let settings = PromptSettings {
                strategy: args.strategy.into(),
                k: args.k,
                context_len: args.context_len,
                input_reserve: args.input_reserve,
                seed: args.seed,
                bm25: Bm25Params::default(),
            };
            let embedder_arg = matches!(args.strategy, StrategyArg::Embedding)
                .then_some(&embedder as &dyn lamp_core::retrieval::EmbeddingProvider);
            build_personalized_input(sample, &task, &settings, embedder_arg)?
        };
        lines.push(audit_line(&sample.id, &prompt));
    }

    let body = lines.join("\n") + "\n";
    match &args.out {
        Some(path) => {
            fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
            println!("{} prompts -> {}", lines.len(), path.display());
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(0)
}

#[derive(Deserialize)]
struct PredictionRow {
    sample_id: String,
    prediction: String,
}

fn cmd_eval(args: EvalArgs) -> Result<i32> {
    let task = load_task(&args.task)?;
    let gold: Dataset = load_dataset(&args.gold, &task)?;
    let raw = fs::read_to_string(&args.predictions)
        .with_context(|| format!("reading {}", args.predictions.display()))?;

    let mut predictions: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: PredictionRow = serde_json::from_str(line)
            .with_context(|| format!("parsing prediction line {}", lineno + 1))?;
        if predictions.insert(row.sample_id.clone(), row.prediction).is_some() {
            bail!("duplicate prediction for sample {}", row.sample_id);
        }
    }

    let mut records = Vec::with_capacity(gold.samples.len());
    for sample in &gold.samples {
        let prediction = predictions
            .get(&sample.id)
            .with_context(|| format!("no prediction for sample {}", sample.id))?;
        records.push((sample.id.clone(), prediction.clone(), sample.target.clone()));
    }
    records.sort_by(|a, b| a.0.cmp(&b.0));

    let report = evaluate_run(&task, &records)?;
    fs::write(&args.report, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("writing {}", args.report.display()))?;

    let mut score_columns: Vec<String> = report
        .per_sample
        .iter()
        .flat_map(|row| row.scores.keys().cloned())
        .collect();
    score_columns.sort();
    score_columns.dedup();

    let mut writer = csv::Writer::from_path(&args.csv)
        .with_context(|| format!("opening {}", args.csv.display()))?;
    let mut header = vec!["sample_id", "prediction_raw", "prediction_mapped", "gold"];
    header.extend(score_columns.iter().map(String::as_str));
    writer.write_record(&header)?;
    for row in &report.per_sample {
        let mut record = vec![
            row.sample_id.clone(),
            row.prediction_raw.clone(),
            row.prediction_mapped.clone(),
            row.gold.clone(),
        ];
        for col in &score_columns {
            record.push(row.scores.get(col).map(|v| v.to_string()).unwrap_or_default());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;

    for (name, value) in &report.metrics {
        println!("{name:<12}{value:.6}");
    }
    println!("n           {}", report.n);
    println!("mapped      {:.4}", report.mapped_fraction);
    println!("report      {}", args.report.display());
    println!("csv         {}", args.csv.display());
    Ok(0)
}

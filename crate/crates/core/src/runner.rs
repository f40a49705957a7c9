//! Runs the full pipeline over a dataset: build a prompt per sample,
//! query the language model, score the raw predictions, and persist the
//! artifacts.
//!
//! Three files land in the output directory:
//! - `report.json` — metrics, per-sample rows, and failure accounting.
//!   Byte-identical across re-runs of the same experiment, regardless of
//!   worker count.
//! - `prompts.jsonl` — one audit row per scored sample.
//! - `run_meta.json` — the full config echo plus wall-clock and latency
//!   numbers (the parts that legitimately vary between runs).
//!
//! Samples whose LM call fails after retries are excluded from metrics
//! and counted in the report; they are never silently scored.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{evaluate_run, MetricError, MetricReport};
use crate::model::{load_dataset, ModelError, Sample};
use crate::prompting::{
    build_personalized_input, build_plain_input, Prompt, PromptError, PromptSettings,
};
use crate::retrieval::{Bm25Params, EmbeddingProvider, HashingEmbedder, HttpEmbedder, Strategy};
use crate::tasks::{self, TaskSpec};
use crate::text::count_tokens;

/// Environment variable read for the HTTP LM bearer token.
pub const LM_TOKEN_ENV: &str = "LAMP_LM_TOKEN";

/// Retry behavior for LM calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: usize,
    /// First backoff; doubles per attempt.
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, backoff_ms: 100 }
    }
}

/// Decoding and transport parameters for one generation call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_output_tokens: usize,
    pub temperature: f64,
    #[serde(default)]
    pub stop: Vec<String>,
    pub timeout_ms: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            max_output_tokens: 128,
            temperature: 0.0,
            stop: Vec::new(),
            timeout_ms: 30_000,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LmError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("provider rejected the request: {0}")]
    Provider(String),
}

/// A language model client. `generate` must be total for prompts within
/// the provider limit; failures surface as errors, never as silently
/// truncated output.
pub trait LmClient: Send + Sync {
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LmError>;

    /// Hard context limit in provider tokens, when the provider declares
    /// one.
    fn context_limit(&self) -> Option<usize> {
        None
    }
}

/// Mock: returns the prompt verbatim.
pub struct EchoLm;

impl LmClient for EchoLm {
    fn generate(&self, prompt: &str, _params: &GenerationParams) -> Result<String, LmError> {
        Ok(prompt.to_string())
    }
}

/// Mock: returns a constant.
pub struct FixedLm {
    text: String,
}

impl FixedLm {
    pub fn new(text: impl Into<String>) -> Self {
        FixedLm { text: text.into() }
    }
}

impl LmClient for FixedLm {
    fn generate(&self, _prompt: &str, _params: &GenerationParams) -> Result<String, LmError> {
        Ok(self.text.clone())
    }
}

/// Mock: returns the gold answer of the first rule whose marker substring
/// occurs in the prompt, else a fixed fallback.
pub struct GoldIfPresentLm {
    rules: Vec<(String, String)>,
    fallback: String,
}

impl GoldIfPresentLm {
    pub fn new(rules: Vec<(String, String)>, fallback: impl Into<String>) -> Self {
        GoldIfPresentLm { rules, fallback: fallback.into() }
    }
}

impl LmClient for GoldIfPresentLm {
    fn generate(&self, prompt: &str, _params: &GenerationParams) -> Result<String, LmError> {
        for (marker, gold) in &self.rules {
            if prompt.contains(marker) {
                return Ok(gold.clone());
            }
        }
        Ok(self.fallback.clone())
    }
}

/// HTTP LM client speaking `{"prompt", "max_tokens", "temperature",
/// "stop"}` → `{"text"}`. Retries transport failures and 5xx responses
/// with exponential backoff; sends `Authorization: Bearer` when
/// `LAMP_LM_TOKEN` is set.
pub struct HttpLm {
    endpoint: String,
    context_limit: Option<usize>,
    client: reqwest::blocking::Client,
}

impl HttpLm {
    pub fn new(endpoint: impl Into<String>, context_limit: Option<usize>) -> Self {
        HttpLm {
            endpoint: endpoint.into(),
            context_limit,
            client: reqwest::blocking::Client::new(),
        }
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    max_tokens: usize,
    temperature: f64,
    stop: &'a [String],
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// One POST to an LM endpoint with the retry policy applied. Transport
/// errors and 5xx statuses are retried; other statuses and malformed
/// bodies fail immediately.
pub fn http_generate(
    client: &reqwest::blocking::Client,
    endpoint: &str,
    prompt: &str,
    params: &GenerationParams,
) -> Result<String, LmError> {
    let attempts = params.retry.max_attempts.max(1);
    let mut last_failure = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            let backoff = params.retry.backoff_ms.saturating_mul(1 << (attempt - 1));
            std::thread::sleep(Duration::from_millis(backoff));
        }
        let mut request = client
            .post(endpoint)
            .timeout(Duration::from_millis(params.timeout_ms))
            .json(&GenerateRequest {
                prompt,
                max_tokens: params.max_output_tokens,
                temperature: params.temperature,
                stop: &params.stop,
            });
        if let Ok(token) = std::env::var(LM_TOKEN_ENV) {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        match request.send() {
            Ok(resp) if resp.status().is_success() => {
                let body: GenerateResponse =
                    resp.json().map_err(|e| LmError::Protocol(e.to_string()))?;
                return Ok(body.text);
            }
            Ok(resp) if resp.status().is_server_error() => {
                last_failure = format!("status {}", resp.status());
            }
            Ok(resp) => {
                return Err(LmError::Provider(format!("status {}", resp.status())));
            }
            Err(e) => {
                last_failure = e.to_string();
            }
        }
    }
    Err(LmError::Transport(format!("{attempts} attempts exhausted: {last_failure}")))
}

impl LmClient for HttpLm {
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LmError> {
        if let Some(limit) = self.context_limit {
            let tokens = count_tokens(prompt);
            if tokens > limit {
                return Err(LmError::Provider(format!(
                    "prompt is {tokens} tokens, provider limit is {limit}"
                )));
            }
        }
        http_generate(&self.client, &self.endpoint, prompt, params)
    }

    fn context_limit(&self) -> Option<usize> {
        self.context_limit
    }
}

/// LM endpoint descriptor in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LmSpec {
    Echo,
    Fixed { text: String },
    Http {
        endpoint: String,
        #[serde(default)]
        context_limit: Option<usize>,
    },
}

/// Build a client from its config descriptor.
pub fn build_client(spec: &LmSpec) -> Box<dyn LmClient> {
    match spec {
        LmSpec::Echo => Box::new(EchoLm),
        LmSpec::Fixed { text } => Box::new(FixedLm::new(text.clone())),
        LmSpec::Http { endpoint, context_limit } => {
            Box::new(HttpLm::new(endpoint.clone(), *context_limit))
        }
    }
}

/// Embedding provider descriptor for the embedding retriever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbedderSpec {
    Hashing { dimension: usize },
    Http { endpoint: String, dimension: usize },
}

pub fn build_embedder(spec: &EmbedderSpec) -> Box<dyn EmbeddingProvider> {
    match spec {
        EmbedderSpec::Hashing { dimension } => Box::new(HashingEmbedder::new(*dimension)),
        EmbedderSpec::Http { endpoint, dimension } => {
            Box::new(HttpEmbedder::new(endpoint.clone(), *dimension))
        }
    }
}

/// Whether prompts carry retrieved profile entries or just the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Personalized,
    NoRetrieval,
}

fn default_k() -> usize {
    1
}
fn default_context_len() -> usize {
    512
}
fn default_input_reserve() -> usize {
    256
}
fn default_concurrency() -> usize {
    4
}
fn default_strategy() -> Strategy {
    Strategy::Bm25
}

/// One experiment: dataset, prompt construction settings, LM endpoint,
/// and output location. In no-retrieval mode the retriever and k are
/// ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task_id: String,
    pub dataset: PathBuf,
    pub mode: RunMode,
    #[serde(default = "default_strategy")]
    pub retriever: Strategy,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_context_len")]
    pub context_len: usize,
    #[serde(default = "default_input_reserve")]
    pub input_reserve: usize,
    #[serde(default)]
    pub seed: u64,
    pub lm: LmSpec,
    #[serde(default)]
    pub params: GenerationParams,
    #[serde(default)]
    pub embedder: Option<EmbedderSpec>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub rate_limit_per_sec: Option<f64>,
    pub output_dir: PathBuf,
}

/// The semantic subset of the config echoed into `report.json`. Worker
/// count, rate limits, and output paths stay out so re-runs and
/// different parallelism produce byte-identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentEcho {
    pub task_id: String,
    pub dataset: PathBuf,
    pub mode: RunMode,
    pub retriever: Strategy,
    pub k: usize,
    pub context_len: usize,
    pub input_reserve: usize,
    pub seed: u64,
    pub lm: LmSpec,
    pub embedder: Option<EmbedderSpec>,
}

impl ExperimentEcho {
    fn from_config(config: &ExperimentConfig) -> Self {
        ExperimentEcho {
            task_id: config.task_id.clone(),
            dataset: config.dataset.clone(),
            mode: config.mode,
            retriever: config.retriever,
            k: config.k,
            context_len: config.context_len,
            input_reserve: config.input_reserve,
            seed: config.seed,
            lm: config.lm.clone(),
            embedder: config.embedder.clone(),
        }
    }
}

/// Persisted run outcome: metrics plus failure accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: ExperimentEcho,
    pub n_total: usize,
    pub n_scored: usize,
    pub n_failed: usize,
    pub failed_sample_ids: Vec<String>,
    pub report: MetricReport,
}

/// Latency summary over scored samples, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Everything a run produced, including where it was written.
#[derive(Debug)]
pub struct RunArtifact {
    pub report: RunReport,
    pub report_path: PathBuf,
    pub prompts_path: PathBuf,
    pub meta_path: PathBuf,
    pub wall_clock: Duration,
    pub latency: LatencyStats,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Task(#[from] tasks::UnknownTask),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("every sample failed; nothing to score")]
    AllSamplesFailed,
}

#[derive(Serialize)]
struct AuditRow<'a> {
    sample_id: &'a str,
    prompt: &'a str,
    used_entry_ids: &'a [String],
    token_counts: AuditTokenCounts<'a>,
}

#[derive(Serialize)]
struct AuditTokenCounts<'a> {
    ppeps: &'a [usize],
    input: usize,
    total: usize,
}

/// Audit JSON line for one prompt.
pub fn audit_line(sample_id: &str, prompt: &Prompt) -> String {
    serde_json::to_string(&AuditRow {
        sample_id,
        prompt: &prompt.text,
        used_entry_ids: &prompt.used_entry_ids,
        token_counts: AuditTokenCounts {
            ppeps: &prompt.ppep_token_counts,
            input: prompt.input_tokens,
            total: prompt.total_tokens,
        },
    })
    .expect("audit row serialization cannot fail")
}

/// Build the prompt for one sample under this experiment's settings.
pub fn prompt_for_sample(
    config: &ExperimentConfig,
    task: &TaskSpec,
    sample: &Sample,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<Prompt, PromptError> {
    match config.mode {
        RunMode::Personalized => {
            let settings = PromptSettings {
                strategy: config.retriever,
                k: config.k,
                context_len: config.context_len,
                input_reserve: config.input_reserve,
                seed: config.seed,
                bm25: Bm25Params::default(),
            };
            build_personalized_input(sample, task, &settings, embedder)
        }
        RunMode::NoRetrieval => build_plain_input(task, &sample.input, config.input_reserve),
    }
}

enum SampleOutcome {
    Scored { prompt: Prompt, raw: String, elapsed: Duration },
    LmFailed { error: String },
    PromptFailed { error: PromptError },
}

/// Execute the experiment: prompts may be built and LM calls issued
/// concurrently (`config.concurrency` workers), but records are merged in
/// sample-id order so the output is independent of scheduling.
pub fn run_experiment(
    config: &ExperimentConfig,
    client: &dyn LmClient,
) -> Result<RunArtifact, RunError> {
    let started = Instant::now();
    let task = tasks::by_id(&config.task_id)?;
    let dataset = load_dataset(&config.dataset, &task)?;
    if config.mode == RunMode::Personalized && config.retriever == Strategy::Embedding
        && config.embedder.is_none()
    {
        return Err(RunError::Config("embedding retriever needs an embedder spec".into()));
    }
    let embedder = config.embedder.as_ref().map(build_embedder);

    let mut samples: Vec<&Sample> = dataset.samples.iter().collect();
    samples.sort_by(|a, b| a.id.cmp(&b.id));

    let rate_gate = config.rate_limit_per_sec.map(|per_sec| {
        (Mutex::new(Instant::now()), Duration::from_secs_f64(1.0 / per_sec))
    });

    let outcomes = parallel_map(&samples, config.concurrency.max(1), |sample| {
        let prompt = match prompt_for_sample(config, &task, sample, embedder.as_deref()) {
            Ok(p) => p,
            Err(e) => return SampleOutcome::PromptFailed { error: e },
        };
        if let Some((gate, interval)) = &rate_gate {
            let wait = {
                let mut next = gate.lock().unwrap();
                let now = Instant::now();
                let at = (*next).max(now);
                *next = at + *interval;
                at.saturating_duration_since(now)
            };
            std::thread::sleep(wait);
        }
        let call_started = Instant::now();
        match client.generate(&prompt.text, &config.params) {
            Ok(raw) => SampleOutcome::Scored { prompt, raw, elapsed: call_started.elapsed() },
            Err(e) => SampleOutcome::LmFailed { error: e.to_string() },
        }
    });

    let mut records: Vec<(String, String, String)> = Vec::new();
    let mut audit_lines: Vec<String> = Vec::new();
    let mut failed: Vec<(String, String)> = Vec::new();
    let mut latencies: Vec<Duration> = Vec::new();
    for (sample, outcome) in samples.iter().zip(outcomes) {
        match outcome {
            SampleOutcome::Scored { prompt, raw, elapsed } => {
                audit_lines.push(audit_line(&sample.id, &prompt));
                records.push((sample.id.clone(), raw, sample.target.clone()));
                latencies.push(elapsed);
            }
            SampleOutcome::LmFailed { error } => failed.push((sample.id.clone(), error)),
            SampleOutcome::PromptFailed { error } => return Err(error.into()),
        }
    }
    if records.is_empty() {
        return Err(RunError::AllSamplesFailed);
    }

    let report = RunReport {
        experiment: ExperimentEcho::from_config(config),
        n_total: samples.len(),
        n_scored: records.len(),
        n_failed: failed.len(),
        failed_sample_ids: failed.iter().map(|(id, _)| id.clone()).collect(),
        report: evaluate_run(&task, &records)?,
    };

    let latency = latency_stats(&latencies);
    let wall_clock = started.elapsed();
    persist(config, &report, &audit_lines, &failed, latency, wall_clock)
}

fn latency_stats(latencies: &[Duration]) -> LatencyStats {
    if latencies.is_empty() {
        return LatencyStats { mean_ms: 0.0, min_ms: 0.0, max_ms: 0.0 };
    }
    let ms: Vec<f64> = latencies.iter().map(|d| d.as_secs_f64() * 1000.0).collect();
    LatencyStats {
        mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
        min_ms: ms.iter().cloned().fold(f64::INFINITY, f64::min),
        max_ms: ms.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn persist(
    config: &ExperimentConfig,
    report: &RunReport,
    audit_lines: &[String],
    failed: &[(String, String)],
    latency: LatencyStats,
    wall_clock: Duration,
) -> Result<RunArtifact, RunError> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source: std::io::Error| RunError::Io { path: path.clone(), source }
    };
    std::fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;

    let report_path = config.output_dir.join("report.json");
    let report_json =
        serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    std::fs::write(&report_path, &report_json).map_err(io_err(&report_path))?;

    let prompts_path = config.output_dir.join("prompts.jsonl");
    let mut prompts_file = audit_lines.join("\n");
    if !prompts_file.is_empty() {
        prompts_file.push('\n');
    }
    std::fs::write(&prompts_path, prompts_file).map_err(io_err(&prompts_path))?;

    let meta_path = config.output_dir.join("run_meta.json");
    let meta = serde_json::json!({
        "config": config,
        "wall_clock_ms": wall_clock.as_secs_f64() * 1000.0,
        "latency": latency,
        "failures": failed
            .iter()
            .map(|(id, err)| serde_json::json!({"sample_id": id, "error": err}))
            .collect::<Vec<_>>(),
    });
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(io_err(&meta_path))?;

    Ok(RunArtifact {
        report: report.clone(),
        report_path,
        prompts_path,
        meta_path,
        wall_clock,
        latency,
    })
}

/// Map `f` over `items` with a fixed-size worker pool; results come back
/// in input order.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    workers: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let n = items.len();
    if n == 0 {
        return Vec::new();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let result = f(&items[i]);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

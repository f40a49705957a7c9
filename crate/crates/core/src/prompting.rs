//! Turns a sample into a personalized model input: render each retrieved
//! profile entry through the task's per-entry template, trim to the token
//! budget, and aggregate with the task input.
//!
//! Budget rule: with a model context of `context_len` tokens and
//! `input_reserve` tokens held back for the task input (256 by default),
//! each of the k rendered entries may occupy
//! `floor((context_len - input_reserve) / k)` tokens. Joiner and glue
//! tokens are charged against the entry share so the assembled prompt
//! never exceeds `context_len`. Trimming drops trailing tokens of the
//! longest trimmable field first; template text and title/score/tag
//! fields are never touched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ProfileEntry, Sample};
use crate::retrieval::{
    retrieve, sample_seed, Bm25Params, EmbeddingProvider, Query, RetrievalError, Strategy,
};
use crate::tasks::{AipRule, TaskSpec};
use crate::text::{count_tokens, token_spans, truncate_tokens};

/// Token budget for one prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    /// Model context size in proxy tokens (L).
    pub context_len: usize,
    /// Tokens reserved for the task input (L̄).
    pub input_reserve: usize,
    /// Number of augmenting entries.
    pub k: usize,
    /// floor((context_len - input_reserve) / k).
    pub per_entry: usize,
}

impl TokenBudget {
    pub fn new(context_len: usize, input_reserve: usize, k: usize) -> Result<Self, PromptError> {
        if k == 0 {
            return Err(PromptError::InvalidBudget("k must be at least 1".into()));
        }
        if context_len <= input_reserve {
            return Err(PromptError::InvalidBudget(format!(
                "context_len ({context_len}) must exceed input_reserve ({input_reserve})"
            )));
        }
        let per_entry = (context_len - input_reserve) / k;
        if per_entry == 0 {
            return Err(PromptError::InvalidBudget(format!(
                "per-entry budget is zero: ({context_len} - {input_reserve}) / {k}"
            )));
        }
        Ok(TokenBudget { context_len, input_reserve, k, per_entry })
    }
}

/// One profile entry rendered through the task template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedEntry {
    pub entry_id: String,
    pub text: String,
    pub token_count: usize,
    pub trimmed: bool,
}

/// The personalized model input plus budget metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub task_id: String,
    pub used_entry_ids: Vec<String>,
    pub ppep_token_counts: Vec<usize>,
    pub trimmed_flags: Vec<bool>,
    pub input_tokens: usize,
    pub total_tokens: usize,
    pub input_truncated: bool,
}

/// Configuration for [`build_personalized_input`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptSettings {
    pub strategy: Strategy,
    pub k: usize,
    pub context_len: usize,
    pub input_reserve: usize,
    pub seed: u64,
    #[serde(default)]
    pub bm25: Bm25Params,
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings {
            strategy: Strategy::Bm25,
            k: 1,
            context_len: 512,
            input_reserve: 256,
            seed: 0,
            bm25: Bm25Params::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("input is empty")]
    EmptyInput,
    #[error("no rendered entries to aggregate")]
    EmptyPpeps,
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("entry {entry_id:?} lacks template field {field:?}")]
    MissingField { entry_id: String, field: String },
    #[error("budget below template floor for entry {entry_id:?}: {floor} tokens needed, {budget} allowed")]
    BudgetBelowTemplateFloor { entry_id: String, floor: usize, budget: usize },
    #[error("title segment not found: input has no quoted title to splice after")]
    TitleSegmentNotFound,
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

/// The query is the whole task input, verbatim.
pub fn make_query(_task: &TaskSpec, input: &str) -> Result<Query, PromptError> {
    if input.is_empty() {
        return Err(PromptError::EmptyInput);
    }
    Ok(Query::new(input))
}

enum Segment<'a> {
    Literal(&'a str),
    Field(&'a str),
}

fn parse_template(template: &str) -> Vec<Segment<'_>> {
    let mut segments = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            segments.push(Segment::Literal(&rest[..open]));
        }
        match rest[open..].find('}') {
            Some(close_rel) => {
                let close = open + close_rel;
                segments.push(Segment::Field(&rest[open + 1..close]));
                rest = &rest[close + 1..];
            }
            None => {
                segments.push(Segment::Literal(&rest[open..]));
                rest = "";
            }
        }
    }
    if !rest.is_empty() {
        segments.push(Segment::Literal(rest));
    }
    segments
}

/// Render one profile entry through the task's per-entry template,
/// trimming trimmable fields until the result fits `budget_tokens`.
pub fn render_ppep(
    task: &TaskSpec,
    entry: &ProfileEntry,
    budget_tokens: usize,
) -> Result<RenderedEntry, PromptError> {
    if budget_tokens == 0 {
        return Err(PromptError::InvalidBudget("per-entry budget must be positive".into()));
    }
    let segments = parse_template(&task.ppep_template);

    // Resolve fields up front so a missing one errors before any trimming.
    let mut field_values: Vec<(&str, &str)> = Vec::new();
    for seg in &segments {
        if let Segment::Field(name) = seg {
            let value = entry.field(name).ok_or_else(|| PromptError::MissingField {
                entry_id: entry.id.clone(),
                field: name.to_string(),
            })?;
            field_values.push((name, value));
        }
    }

    let value_of = |name: &str| field_values.iter().find(|(n, _)| *n == name).map(|(_, v)| *v);

    // Allowed token count per trimmable field that occurs in the template,
    // in trim_fields order (ties in the greedy go to the earlier field).
    let mut allowance: Vec<(&str, usize)> = task
        .trim_fields
        .iter()
        .filter(|f| value_of(f).is_some())
        .map(|f| (f.as_str(), token_spans(value_of(f).unwrap()).len()))
        .collect();
    let full: Vec<usize> = allowance.iter().map(|(_, n)| *n).collect();

    let render = |allowance: &[(&str, usize)]| -> String {
        let mut out = String::new();
        for seg in &segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Field(name) => {
                    let value = value_of(name).expect("resolved above");
                    match allowance.iter().find(|(n, _)| n == name) {
                        Some((_, allowed)) => out.push_str(truncate_tokens(value, *allowed)),
                        None => out.push_str(value),
                    }
                }
            }
        }
        out
    };

    loop {
        let text = render(&allowance);
        let count = count_tokens(&text);
        if count <= budget_tokens {
            let trimmed = allowance.iter().map(|(_, n)| *n).ne(full.iter().copied());
            return Ok(RenderedEntry { entry_id: entry.id.clone(), text, token_count: count, trimmed });
        }
        let mut over = count - budget_tokens;
        let mut progressed = false;
        while over > 0 {
            // Drop a trailing token from the currently longest field.
            let Some(longest) = allowance
                .iter_mut()
                .filter(|(_, n)| *n > 0)
                .max_by_key(|(_, n)| *n)
            else {
                break;
            };
            longest.1 -= 1;
            over -= 1;
            progressed = true;
        }
        if !progressed {
            // Even the empty-trim-field rendering exceeds the budget.
            return Err(PromptError::BudgetBelowTemplateFloor {
                entry_id: entry.id.clone(),
                floor: count,
                budget: budget_tokens,
            });
        }
    }
}

/// Insert `joined` immediately after the input's first quoted segment,
/// separated by a single space. An empty `joined` leaves the input
/// unchanged.
pub fn add_to_paper_title(joined: &str, input: &str) -> Result<String, PromptError> {
    if joined.is_empty() {
        return Ok(input.to_string());
    }
    let open = input.find('"').ok_or(PromptError::TitleSegmentNotFound)?;
    let close_rel = input[open + 1..].find('"').ok_or(PromptError::TitleSegmentNotFound)?;
    let close = open + 1 + close_rel;
    let mut out = String::with_capacity(input.len() + joined.len() + 1);
    out.push_str(&input[..=close]);
    out.push(' ');
    out.push_str(joined);
    out.push_str(&input[close + 1..]);
    Ok(out)
}

/// Join rendered entries and combine them with the task input according
/// to the task's aggregation rule.
pub fn assemble_aip(
    task: &TaskSpec,
    input: &str,
    ppeps: &[RenderedEntry],
) -> Result<Prompt, PromptError> {
    if ppeps.is_empty() {
        return Err(PromptError::EmptyPpeps);
    }
    let joined = ppeps.iter().map(|p| p.text.as_str()).collect::<Vec<_>>().join(&task.joiner);
    let text = match &task.aip_rule {
        AipRule::PrefixJoin => format!("{joined}. {input}"),
        AipRule::AppendPattern { glue } => format!("{joined}{glue}{input}"),
        AipRule::TitleInjection => add_to_paper_title(&joined, input)?,
    };
    Ok(Prompt {
        total_tokens: count_tokens(&text),
        input_tokens: count_tokens(input),
        text,
        task_id: task.task_id.clone(),
        used_entry_ids: ppeps.iter().map(|p| p.entry_id.clone()).collect(),
        ppep_token_counts: ppeps.iter().map(|p| p.token_count).collect(),
        trimmed_flags: ppeps.iter().map(|p| p.trimmed).collect(),
        input_truncated: false,
    })
}

/// Tokens the aggregation itself costs: joiners between `n` entries plus
/// the rule's glue text.
fn aggregation_overhead(task: &TaskSpec, n: usize) -> usize {
    let joiner = count_tokens(&task.joiner) * n.saturating_sub(1);
    let glue = match &task.aip_rule {
        AipRule::PrefixJoin => count_tokens(". "),
        AipRule::AppendPattern { glue } => count_tokens(glue),
        AipRule::TitleInjection => 0,
    };
    joiner + glue
}

/// The full personalized path: query from the input, retrieve k entries,
/// render each under the per-entry budget, aggregate. The input is
/// tail-truncated to `input_reserve` tokens when it alone exceeds it.
pub fn build_personalized_input(
    sample: &Sample,
    task: &TaskSpec,
    settings: &PromptSettings,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<Prompt, PromptError> {
    let budget = TokenBudget::new(settings.context_len, settings.input_reserve, settings.k)?;
    let query = make_query(task, &sample.input)?;
    let result = retrieve(
        settings.strategy,
        &query,
        &sample.profile,
        settings.k,
        sample_seed(settings.seed, &sample.id),
        embedder,
        &task.indexed_fields(),
        settings.bm25,
    )?;

    let input_truncated = count_tokens(&sample.input) > budget.input_reserve;
    let input = truncate_tokens(&sample.input, budget.input_reserve);
    let input_tokens = count_tokens(input);

    let n_used = result.hits.len();
    let overhead = aggregation_overhead(task, n_used);
    let available = budget
        .context_len
        .checked_sub(input_tokens + overhead)
        .ok_or_else(|| PromptError::InvalidBudget("aggregation overhead exceeds context".into()))?;
    let per_entry = budget.per_entry.min(available / n_used);
    if per_entry == 0 {
        return Err(PromptError::InvalidBudget(format!(
            "no tokens left per entry: context {}, input {input_tokens}, overhead {overhead}, entries {n_used}",
            budget.context_len
        )));
    }

    let mut rendered = Vec::with_capacity(n_used);
    for (entry_id, _) in &result.hits {
        let entry = sample
            .profile
            .iter()
            .find(|e| &e.id == entry_id)
            .expect("retrieval only returns profile ids");
        rendered.push(render_ppep(task, entry, per_entry)?);
    }

    let mut prompt = assemble_aip(task, input, &rendered)?;
    prompt.input_truncated = input_truncated;
    debug_assert!(
        prompt.total_tokens <= budget.context_len,
        "prompt exceeds context: {} > {}",
        prompt.total_tokens,
        budget.context_len
    );
    Ok(prompt)
}

/// The no-retrieval baseline: the input passed through with only
/// input-truncation applied.
pub fn build_plain_input(
    task: &TaskSpec,
    input: &str,
    input_reserve: usize,
) -> Result<Prompt, PromptError> {
    if input.is_empty() {
        return Err(PromptError::EmptyInput);
    }
    let input_truncated = count_tokens(input) > input_reserve;
    let text = truncate_tokens(input, input_reserve).to_string();
    Ok(Prompt {
        total_tokens: count_tokens(&text),
        input_tokens: count_tokens(&text),
        text,
        task_id: task.task_id.clone(),
        used_entry_ids: vec![],
        ppep_token_counts: vec![],
        trimmed_flags: vec![],
        input_truncated,
    })
}

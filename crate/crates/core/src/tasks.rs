//! Built-in task definitions: LaMP-1 through LaMP-7, each in a user-based
//! (`U`) and time-based (`T`) split regime.
//!
//! A [`TaskSpec`] fixes everything task-shaped: the label set, the profile
//! entry schema, the per-entry prompt template, the aggregation rule that
//! turns rendered entries plus the task input into one model input, and
//! which fields may be trimmed under a token budget.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Output type of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    BinaryClassification,
    CategoricalClassification,
    OrdinalClassification,
    Generation,
}

/// Which split regime a task id names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitRegime {
    UserBased,
    TimeBased,
}

impl fmt::Display for SplitRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitRegime::UserBased => write!(f, "user-based"),
            SplitRegime::TimeBased => write!(f, "time-based"),
        }
    }
}

/// How rendered per-entry prompts and the task input combine into the
/// final model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum AipRule {
    /// joined entries + ". " + input
    PrefixJoin,
    /// joined entries + `glue` + input
    AppendPattern { glue: String },
    /// splice the joined entries into the input right after its quoted
    /// title segment
    TitleInjection,
}

/// The query is always the whole task input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryRule {
    WholeInput,
}

/// Per-task schema and prompt-construction rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// Full id, e.g. "LaMP-3U".
    pub task_id: String,
    /// Task number 1..=7.
    pub number: u8,
    pub regime: SplitRegime,
    pub kind: TaskKind,
    /// Ordered label list for classification tasks; `None` for generation.
    pub labels: Option<Vec<String>>,
    /// Field names every profile entry must carry, nonempty.
    pub profile_schema: Vec<String>,
    /// Per-entry prompt template with `{field}` placeholders.
    pub ppep_template: String,
    pub aip_rule: AipRule,
    /// Placed between rendered entries when aggregating.
    pub joiner: String,
    /// Fields whose content may be tail-truncated to meet a token budget.
    /// Never contains title, score, or tag.
    pub trim_fields: Vec<String>,
    pub query_rule: QueryRule,
    /// Entry field used as the sample input when building splits
    /// (`None` for the citation-pair task, which synthesizes its input).
    pub input_field: Option<String>,
    /// Entry field used as the sample target when building splits.
    pub target_field: Option<String>,
}

impl TaskSpec {
    /// Fields worth lexical indexing: everything in the schema except
    /// score and tag.
    pub fn indexed_fields(&self) -> Vec<String> {
        self.profile_schema
            .iter()
            .filter(|f| f.as_str() != "score" && f.as_str() != "tag")
            .cloned()
            .collect()
    }

    pub fn is_classification(&self) -> bool {
        self.kind != TaskKind::Generation
    }
}

#[derive(Debug, Error)]
#[error("unknown task id {0:?} (expected LaMP-1..LaMP-7 with a U or T suffix, e.g. \"LaMP-3U\")")]
pub struct UnknownTask(pub String);

/// The movie tag vocabulary for LaMP-2.
pub const MOVIE_TAGS: [&str; 15] = [
    "sci-fi",
    "based on a book",
    "comedy",
    "action",
    "twist ending",
    "dystopia",
    "dark comedy",
    "classic",
    "psychology",
    "fantasy",
    "romance",
    "thought-provoking",
    "social commentary",
    "violence",
    "true story",
];

/// All fourteen built-in task ids.
pub fn all_task_ids() -> Vec<String> {
    (1..=7)
        .flat_map(|n| [format!("LaMP-{n}U"), format!("LaMP-{n}T")])
        .collect()
}

/// Look up a built-in task by id, e.g. `"LaMP-2T"`.
pub fn by_id(task_id: &str) -> Result<TaskSpec, UnknownTask> {
    let rest = task_id.strip_prefix("LaMP-").ok_or_else(|| UnknownTask(task_id.into()))?;
    let (number, regime) = match rest.as_bytes() {
        [n @ b'1'..=b'7', b'U'] => (n - b'0', SplitRegime::UserBased),
        [n @ b'1'..=b'7', b'T'] => (n - b'0', SplitRegime::TimeBased),
        _ => return Err(UnknownTask(task_id.into())),
    };
    Ok(build(number, regime))
}

fn build(number: u8, regime: SplitRegime) -> TaskSpec {
    let suffix = match regime {
        SplitRegime::UserBased => "U",
        SplitRegime::TimeBased => "T",
    };
    let task_id = format!("LaMP-{number}{suffix}");
    let owned = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    match number {
        1 => TaskSpec {
            task_id,
            number,
            regime,
            kind: TaskKind::BinaryClassification,
            labels: Some(owned(&["[1]", "[2]"])),
            profile_schema: owned(&["title", "abstract"]),
            ppep_template: "\"{title}\"".into(),
            aip_rule: AipRule::TitleInjection,
            joiner: ", and ".into(),
            trim_fields: vec![],
            query_rule: QueryRule::WholeInput,
            input_field: None,
            target_field: None,
        },
        2 => TaskSpec {
            task_id,
            number,
            regime,
            kind: TaskKind::CategoricalClassification,
            labels: Some(MOVIE_TAGS.iter().map(|s| s.to_string()).collect()),
            profile_schema: owned(&["description", "tag"]),
            ppep_template: "the tag for the movie: \"{description}\" is \"{tag}\"".into(),
            aip_rule: AipRule::PrefixJoin,
            joiner: ", and ".into(),
            trim_fields: owned(&["description"]),
            query_rule: QueryRule::WholeInput,
            input_field: Some("description".into()),
            target_field: Some("tag".into()),
        },
        3 => TaskSpec {
            task_id,
            number,
            regime,
            kind: TaskKind::OrdinalClassification,
            labels: Some(owned(&["1", "2", "3", "4", "5"])),
            profile_schema: owned(&["text", "score"]),
            ppep_template: "{score} is the score for \"{text}\"".into(),
            aip_rule: AipRule::PrefixJoin,
            joiner: ", and ".into(),
            trim_fields: owned(&["text"]),
            query_rule: QueryRule::WholeInput,
            input_field: Some("text".into()),
            target_field: Some("score".into()),
        },
        4 => TaskSpec {
            task_id,
            number,
            regime,
            kind: TaskKind::Generation,
            labels: None,
            profile_schema: owned(&["title", "text"]),
            ppep_template: "\"{title}\" is the title for \"{text}\"".into(),
            aip_rule: AipRule::PrefixJoin,
            joiner: ", and ".into(),
            trim_fields: owned(&["text"]),
            query_rule: QueryRule::WholeInput,
            input_field: Some("text".into()),
            target_field: Some("title".into()),
        },
        5 => TaskSpec {
            task_id,
            number,
            regime,
            kind: TaskKind::Generation,
            labels: None,
            profile_schema: owned(&["title", "abstract"]),
            ppep_template: "\"{title}\" is the title for \"{abstract}\"".into(),
            aip_rule: AipRule::AppendPattern { glue: ". Following the given patterns ".into() },
            joiner: ", and ".into(),
            trim_fields: owned(&["abstract"]),
            query_rule: QueryRule::WholeInput,
            input_field: Some("abstract".into()),
            target_field: Some("title".into()),
        },
        6 => TaskSpec {
            task_id,
            number,
            regime,
            kind: TaskKind::Generation,
            labels: None,
            profile_schema: owned(&["title", "text"]),
            ppep_template: "\"{title}\" is the title for \"{text}\"".into(),
            aip_rule: AipRule::PrefixJoin,
            joiner: ", and ".into(),
            trim_fields: owned(&["text"]),
            query_rule: QueryRule::WholeInput,
            input_field: Some("text".into()),
            target_field: Some("title".into()),
        },
        7 => TaskSpec {
            task_id,
            number,
            regime,
            kind: TaskKind::Generation,
            labels: None,
            profile_schema: owned(&["text"]),
            ppep_template: "\"{text}\"".into(),
            aip_rule: AipRule::AppendPattern {
                glue: " are written by a person. Following the given patterns ".into(),
            },
            joiner: ", and ".into(),
            trim_fields: owned(&["text"]),
            query_rule: QueryRule::WholeInput,
            input_field: Some("text".into()),
            target_field: Some("text".into()),
        },
        _ => unreachable!("task numbers are validated by by_id"),
    }
}

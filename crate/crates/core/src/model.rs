//! Task, user, profile, and sample data model plus dataset file I/O.
//!
//! Everything here is immutable after construction and safe to share
//! across threads. Dataset files are self-contained UTF-8 JSON:
//!
//! ```json
//! {"task": "<task id>", "samples": [{"id": "...", "user_id": "...",
//!   "input": "...", "target": "...",
//!   "profile": [{"id": "...", "date": 1234567890, "<field>": "..."}]}]}
//! ```
//!
//! Field names on profile entries are exactly the lowercase names in the
//! task's profile schema; unknown extra string fields are preserved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::{TaskKind, TaskSpec};

/// One historical item of a user: an id, an optional timestamp (seconds
/// since epoch, UTC), and named text fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub date: Option<i64>,
    #[serde(flatten)]
    pub fields: BTreeMap<String, String>,
}

impl ProfileEntry {
    pub fn new(id: impl Into<String>) -> Self {
        ProfileEntry { id: id.into(), date: None, fields: BTreeMap::new() }
    }

    pub fn with_date(mut self, date: i64) -> Self {
        self.date = Some(date);
        self
    }

    pub fn with_field(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.fields.insert(name.into(), value.into());
        self
    }

    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str)
    }
}

/// The unit the pipeline processes: an input, its target, and the owning
/// user's profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub user_id: String,
    pub input: String,
    pub target: String,
    pub profile: Vec<ProfileEntry>,
}

/// A task's samples plus free-text provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: TaskSpec,
    pub provenance: Option<String>,
    pub samples: Vec<Sample>,
}

/// Wire form of a dataset file; `task` is the task id string.
#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<String>,
    samples: Vec<Sample>,
}

/// One broken invariant, naming the offending entry where applicable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entry_id: Option<String>,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.entry_id {
            Some(id) => write!(f, "entry {id}: {}", self.rule),
            None => write!(f, "{}", self.rule),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unknown task id {0:?}")]
    UnknownTask(String),
    #[error("dataset declares task {found:?} but {expected:?} was requested")]
    TaskMismatch { expected: String, found: String },
    #[error("sample {sample_id} failed validation: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation { sample_id: String, violations: Vec<Violation> },
}

/// Check one sample against the task's invariants. Returns an empty list
/// when everything holds; pure for identical inputs.
pub fn validate_sample(sample: &Sample, task: &TaskSpec) -> Vec<Violation> {
    let mut violations = Vec::new();

    if sample.id.is_empty() {
        violations.push(Violation { entry_id: None, rule: "sample id is empty".into() });
    }

    let mut seen = BTreeSet::new();
    for entry in &sample.profile {
        if entry.id.is_empty() {
            violations.push(Violation { entry_id: None, rule: "profile entry id is empty".into() });
        } else if !seen.insert(entry.id.as_str()) {
            violations.push(Violation {
                entry_id: Some(entry.id.clone()),
                rule: format!("duplicate profile entry id {:?}", entry.id),
            });
        }
        for field in &task.profile_schema {
            match entry.field(field) {
                Some(v) if !v.is_empty() => {}
                Some(_) => violations.push(Violation {
                    entry_id: Some(entry.id.clone()),
                    rule: format!("required field {field:?} is empty"),
                }),
                None => violations.push(Violation {
                    entry_id: Some(entry.id.clone()),
                    rule: format!("required field {field:?} is missing"),
                }),
            }
        }
    }

    if task.kind != TaskKind::Generation {
        if let Some(labels) = &task.labels {
            if !labels.iter().any(|l| l == &sample.target) {
                violations.push(Violation {
                    entry_id: None,
                    rule: format!(
                        "target {:?} not in label set {{{}}}",
                        sample.target,
                        labels.join(", ")
                    ),
                });
            }
        }
    }

    // No target leakage: the input must differ from every profile entry's
    // rendered output field.
    if let Some(target_field) = &task.target_field {
        for entry in &sample.profile {
            if entry.field(target_field) == Some(sample.input.as_str()) {
                violations.push(Violation {
                    entry_id: Some(entry.id.clone()),
                    rule: format!("input is identical to this entry's {target_field:?} field"),
                });
            }
        }
    }

    violations
}

/// Load a dataset file, validating every sample against `task`.
/// Sample order is preserved from the file.
pub fn load_dataset(path: impl AsRef<Path>, task: &TaskSpec) -> Result<Dataset, ModelError> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: DatasetFile = serde_json::from_str(&raw).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.task != task.task_id {
        return Err(ModelError::TaskMismatch {
            expected: task.task_id.clone(),
            found: file.task,
        });
    }
    let dataset = Dataset {
        task: task.clone(),
        provenance: file.provenance,
        samples: file.samples,
    };
    validate_dataset(&dataset)?;
    Ok(dataset)
}

/// Validate every sample; error names the first offending sample.
pub fn validate_dataset(dataset: &Dataset) -> Result<(), ModelError> {
    let mut ids = BTreeSet::new();
    for sample in &dataset.samples {
        if !ids.insert(sample.id.as_str()) {
            return Err(ModelError::Validation {
                sample_id: sample.id.clone(),
                violations: vec![Violation {
                    entry_id: None,
                    rule: "duplicate sample id".into(),
                }],
            });
        }
        let violations = validate_sample(sample, &dataset.task);
        if !violations.is_empty() {
            return Err(ModelError::Validation { sample_id: sample.id.clone(), violations });
        }
    }
    Ok(())
}

/// Write a dataset in the file schema. Round-trips through `load_dataset`
/// to a structurally equal dataset.
pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let file = DatasetFile {
        task: dataset.task.task_id.clone(),
        provenance: dataset.provenance.clone(),
        samples: dataset.samples.clone(),
    };
    let json = serde_json::to_string_pretty(&file).expect("dataset serialization cannot fail");
    std::fs::write(path, json).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

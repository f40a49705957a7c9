//! Retrieval-augmented personalization pipeline for LaMP-style tasks.
//!
//! For each task input, the pipeline selects the k most pertinent entries
//! from the user's history, renders them through per-task templates under
//! a token budget, queries a language model with the assembled prompt,
//! and scores the predictions. The crate also builds user-based and
//! time-based dataset splits from raw per-user histories.
//!
//! Module map:
//! - [`model`] — tasks, samples, profiles, dataset file I/O and validation
//! - [`tasks`] — the built-in task definitions (LaMP-1..7, U/T regimes)
//! - [`text`] — the proxy tokenizer all budgets and metrics share
//! - [`retrieval`] — BM25, recency, random, and embedding retrievers
//! - [`prompting`] — per-entry prompt rendering, trimming, aggregation
//! - [`splits`] — user-based and time-based split construction
//! - [`metrics`] — accuracy, macro-F1, MAE/RMSE, ROUGE-1/L, label mapping
//! - [`runner`] — experiment orchestration, LM clients, report output

pub mod metrics;
pub mod model;
pub mod prompting;
pub mod retrieval;
pub mod runner;
pub mod splits;
pub mod tasks;
pub mod text;

pub use model::{load_dataset, save_dataset, validate_sample, Dataset, ProfileEntry, Sample};
pub use prompting::{build_personalized_input, build_plain_input, Prompt, PromptSettings};
pub use retrieval::{retrieve, Query, RetrievalResult, Strategy};
pub use tasks::TaskSpec;
pub use text::tokenize;

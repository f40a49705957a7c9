//! Evaluation suite: accuracy, macro-F1, MAE/RMSE, ROUGE-1/ROUGE-L, and
//! out-of-label mapping for free-text classifier outputs.
//!
//! ROUGE preprocessing is the shared tokenizer (lowercase, split on
//! non-alphanumerics) with no stemming or stopword removal. Macro F1
//! averages per-label F1 over the *whole* label set; labels absent from
//! both predictions and golds contribute zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::{TaskKind, TaskSpec};
use crate::text::tokenize;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("length mismatch: {preds} predictions vs {golds} golds")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("empty input: at least one (prediction, gold) pair is required")]
    Empty,
    #[error("ordinal label {0:?} does not parse as an integer")]
    UnparsableOrdinal(String),
}

/// Precision, recall, F1 triple for ROUGE variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    const ZERO: RougeScore = RougeScore { precision: 0.0, recall: 0.0, f1: 0.0 };

    fn from_overlap(overlap: f64, cand_len: usize, ref_len: usize) -> RougeScore {
        if cand_len == 0 || ref_len == 0 {
            return RougeScore::ZERO;
        }
        let precision = overlap / cand_len as f64;
        let recall = overlap / ref_len as f64;
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        RougeScore { precision, recall, f1 }
    }
}

/// Fraction of exact matches.
pub fn accuracy<A: AsRef<str>, B: AsRef<str>>(preds: &[A], golds: &[B]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), golds.len())?;
    let hits = preds
        .iter()
        .zip(golds)
        .filter(|(p, g)| p.as_ref() == g.as_ref())
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Unweighted mean of per-label F1 over `labels`. A label with zero
/// precision + recall (including labels absent from both sides)
/// contributes 0.
pub fn macro_f1<A: AsRef<str>, B: AsRef<str>, L: AsRef<str>>(
    preds: &[A],
    golds: &[B],
    labels: &[L],
) -> Result<f64, MetricError> {
    check_lengths(preds.len(), golds.len())?;
    let mut total = 0.0;
    for label in labels {
        let label = label.as_ref();
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (p, g) in preds.iter().zip(golds) {
            let p_is = p.as_ref() == label;
            let g_is = g.as_ref() == label;
            match (p_is, g_is) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        if precision + recall > 0.0 {
            total += 2.0 * precision * recall / (precision + recall);
        }
    }
    Ok(total / labels.len() as f64)
}

/// Mean absolute error.
pub fn mae(preds: &[f64], golds: &[f64]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), golds.len())?;
    let sum: f64 = preds.iter().zip(golds).map(|(p, g)| (p - g).abs()).sum();
    Ok(sum / preds.len() as f64)
}

/// Root mean squared error.
pub fn rmse(preds: &[f64], golds: &[f64]) -> Result<f64, MetricError> {
    check_lengths(preds.len(), golds.len())?;
    let sum: f64 = preds.iter().zip(golds).map(|(p, g)| (p - g) * (p - g)).sum();
    Ok((sum / preds.len() as f64).sqrt())
}

fn check_lengths(preds: usize, golds: usize) -> Result<(), MetricError> {
    if preds != golds {
        return Err(MetricError::LengthMismatch { preds, golds });
    }
    if preds == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// ROUGE-1: clipped unigram overlap between the tokenized candidate and
/// reference. Empty candidate or reference scores all zeros.
pub fn rouge1(candidate: &str, reference: &str) -> RougeScore {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return RougeScore::ZERO;
    }
    let mut ref_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &refr {
        *ref_counts.entry(t).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for t in &cand {
        if let Some(c) = ref_counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    RougeScore::from_overlap(overlap as f64, cand.len(), refr.len())
}

/// ROUGE-L: longest common subsequence over token sequences.
pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return RougeScore::ZERO;
    }
    let lcs = lcs_length(&cand, &refr);
    RougeScore::from_overlap(lcs as f64, cand.len(), refr.len())
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    // Two-row DP keeps memory linear in the reference length.
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(curr[j]) };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Outcome of mapping a generated string onto the label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedLabel {
    pub label: String,
    /// True when similarity mapping was needed (no trimmed exact match).
    pub mapped: bool,
}

/// Map free-form generated text to the nearest label. A trimmed exact
/// match returns unmapped; otherwise the argmax of `similarity(label,
/// generated)` wins, ties going to the earlier label in the list.
pub fn map_to_label_with<L: AsRef<str>>(
    generated: &str,
    labels: &[L],
    similarity: impl Fn(&str, &str) -> f64,
) -> MappedLabel {
    assert!(!labels.is_empty(), "label set must be nonempty");
    let trimmed = generated.trim();
    if let Some(exact) = labels.iter().find(|l| l.as_ref() == trimmed) {
        return MappedLabel { label: exact.as_ref().to_string(), mapped: false };
    }
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, label) in labels.iter().enumerate() {
        let s = similarity(label.as_ref(), trimmed);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    MappedLabel { label: labels[best].as_ref().to_string(), mapped: true }
}

/// [`map_to_label_with`] using the default similarity: token-level
/// ROUGE-1 F1.
pub fn map_to_label<L: AsRef<str>>(generated: &str, labels: &[L]) -> MappedLabel {
    map_to_label_with(generated, labels, |label, gen| rouge1(gen, label).f1)
}

/// One scored prediction in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub prediction_raw: String,
    pub prediction_mapped: String,
    pub gold: String,
    pub scores: BTreeMap<String, f64>,
}

/// Aggregate and per-sample evaluation results for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task_id: String,
    pub n: usize,
    pub metrics: BTreeMap<String, f64>,
    pub mapped_fraction: f64,
    pub per_sample: Vec<SampleScore>,
}

/// Score a run: `records` are `(sample_id, raw prediction, gold)` rows.
/// Classification predictions go through label mapping first; generation
/// tasks score mean ROUGE-1/ROUGE-L F1.
pub fn evaluate_run(
    task: &TaskSpec,
    records: &[(String, String, String)],
) -> Result<MetricReport, MetricError> {
    if records.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut per_sample = Vec::with_capacity(records.len());
    let mut metrics: BTreeMap<String, f64> = BTreeMap::new();
    let mut mapped_count = 0usize;

    if task.is_classification() {
        let labels = task.labels.as_ref().expect("classification tasks carry labels");
        let mut mapped_preds = Vec::with_capacity(records.len());
        let mut golds = Vec::with_capacity(records.len());
        for (sample_id, raw, gold) in records {
            let mapped = map_to_label(raw, labels);
            if mapped.mapped {
                mapped_count += 1;
            }
            let mut scores = BTreeMap::new();
            scores.insert("correct".into(), f64::from(mapped.label == *gold));
            if task.kind == TaskKind::OrdinalClassification {
                let p = parse_ordinal(&mapped.label)?;
                let g = parse_ordinal(gold)?;
                scores.insert("abs_error".into(), (p - g).abs());
                scores.insert("sq_error".into(), (p - g) * (p - g));
            }
            per_sample.push(SampleScore {
                sample_id: sample_id.clone(),
                prediction_raw: raw.clone(),
                prediction_mapped: mapped.label.clone(),
                gold: gold.clone(),
                scores,
            });
            mapped_preds.push(mapped.label);
            golds.push(gold.clone());
        }
        metrics.insert("accuracy".into(), accuracy(&mapped_preds, &golds)?);
        if task.kind == TaskKind::CategoricalClassification {
            metrics.insert("f1".into(), macro_f1(&mapped_preds, &golds, labels)?);
        }
        if task.kind == TaskKind::OrdinalClassification {
            let p: Vec<f64> = mapped_preds.iter().map(|l| parse_ordinal(l)).collect::<Result<_, _>>()?;
            let g: Vec<f64> = golds.iter().map(|l| parse_ordinal(l)).collect::<Result<_, _>>()?;
            metrics.insert("mae".into(), mae(&p, &g)?);
            metrics.insert("rmse".into(), rmse(&p, &g)?);
        }
    } else {
        let mut r1_sum = 0.0;
        let mut rl_sum = 0.0;
        for (sample_id, raw, gold) in records {
            let r1 = rouge1(raw, gold);
            let rl = rouge_l(raw, gold);
            r1_sum += r1.f1;
            rl_sum += rl.f1;
            let mut scores = BTreeMap::new();
            scores.insert("rouge1_f1".into(), r1.f1);
            scores.insert("rougeL_f1".into(), rl.f1);
            per_sample.push(SampleScore {
                sample_id: sample_id.clone(),
                prediction_raw: raw.clone(),
                prediction_mapped: raw.clone(),
                gold: gold.clone(),
                scores,
            });
        }
        metrics.insert("rouge1".into(), r1_sum / records.len() as f64);
        metrics.insert("rougeL".into(), rl_sum / records.len() as f64);
    }

    Ok(MetricReport {
        task_id: task.task_id.clone(),
        n: records.len(),
        metrics,
        mapped_fraction: mapped_count as f64 / records.len() as f64,
        per_sample,
    })
}

fn parse_ordinal(label: &str) -> Result<f64, MetricError> {
    label
        .trim()
        .parse::<i64>()
        .map(|v| v as f64)
        .map_err(|_| MetricError::UnparsableOrdinal(label.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks;
    use proptest::prelude::*;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&["a", "b"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(accuracy(&["a", "b", "c", "d"], &["a", "b", "x", "y"]).unwrap(), 0.5);
        assert_eq!(accuracy(&["a"], &["b"]).unwrap(), 0.0);
        assert!(matches!(
            accuracy(&["a"], &["a", "b"]),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert!(matches!(accuracy::<&str, &str>(&[], &[]), Err(MetricError::Empty)));
    }

    #[test]
    fn macro_f1_binary_hand_count() {
        // F1(a) = 2/3, F1(b) = 2/3 -> macro 2/3
        let f = macro_f1(&["a", "a", "b"], &["a", "b", "b"], &["a", "b"]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_counts_absent_labels_as_zero() {
        let labels: Vec<String> = (0..15).map(|i| format!("t{i}")).collect();
        let f = macro_f1(&["t0", "t1"], &["t0", "t1"], &labels).unwrap();
        assert!((f - 2.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_all_wrong_is_zero() {
        let f = macro_f1(&["c", "c", "c"], &["a", "b", "a"], &["a", "b", "c"]).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn mae_rmse_hand_values() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let m = mae(&[1.0, 3.0], &[2.0, 5.0]).unwrap();
        let r = rmse(&[1.0, 3.0], &[2.0, 5.0]).unwrap();
        assert!((m - 1.5).abs() < 1e-12);
        assert!((r - 2.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(mae(&[1.0], &[5.0]).unwrap(), 4.0);
        assert_eq!(rmse(&[1.0], &[5.0]).unwrap(), 4.0);
    }

    #[test]
    fn rouge1_hand_values() {
        let r = rouge1("the cat sat", "the cat sat");
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        let r = rouge1("the cat sat on mat", "the cat");
        assert!((r.precision - 0.4).abs() < 1e-12);
        assert!((r.recall - 1.0).abs() < 1e-12);
        assert!((r.f1 - 4.0 / 7.0).abs() < 1e-12);
        let r = rouge1("x y", "p q");
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn rouge1_clips_repeated_tokens() {
        // cand "a a a b" vs ref "a a b b": overlap min(3,2)+min(1,2) = 3
        let r = rouge1("a a a b", "a a b b");
        assert!((r.f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_hand_values() {
        let r = rouge_l("a b c d", "a c b d");
        assert!((r.f1 - 0.75).abs() < 1e-12);
        let r = rouge_l("a b c", "c b a");
        assert!((r.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 1.0 / 3.0).abs() < 1e-12);
        let r = rouge_l("same text here", "same text here");
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn rouge_empty_inputs_are_zero() {
        for (c, r) in [("", "a"), ("a", ""), ("", "")] {
            assert_eq!(rouge1(c, r).f1, 0.0);
            assert_eq!(rouge_l(c, r).f1, 0.0);
        }
    }

    #[test]
    fn maps_exact_label_unmapped() {
        let labels = ["comedy", "sci-fi"];
        let m = map_to_label("comedy", &labels);
        assert_eq!(m.label, "comedy");
        assert!(!m.mapped);
        let m = map_to_label("  comedy  ", &labels);
        assert!(!m.mapped, "whitespace-trimmed exact match is unmapped");
    }

    #[test]
    fn maps_by_token_overlap() {
        let labels = ["sci-fi", "comedy"];
        let m = map_to_label("a sci-fi movie", &labels);
        assert_eq!(m.label, "sci-fi");
        assert!(m.mapped);
    }

    #[test]
    fn zero_similarity_falls_to_first_label() {
        let labels = ["alpha", "beta"];
        let m = map_to_label("zzz qqq", &labels);
        assert_eq!(m.label, "alpha");
        assert!(m.mapped);
    }

    #[test]
    fn mapping_is_idempotent() {
        let labels = ["sci-fi", "comedy", "true story"];
        let m = map_to_label("mostly a true story I think", &labels);
        let again = map_to_label(&m.label, &labels);
        assert_eq!(again.label, m.label);
        assert!(!again.mapped);
    }

    #[test]
    fn evaluate_classification_run() {
        let task = tasks::by_id("LaMP-3U").unwrap();
        let records = vec![
            ("s1".to_string(), "4".to_string(), "4".to_string()),
            ("s2".to_string(), "rated 5 stars".to_string(), "5".to_string()),
            ("s3".to_string(), "1".to_string(), "3".to_string()),
        ];
        let report = evaluate_run(&task, &records).unwrap();
        assert_eq!(report.n, 3);
        // "rated 5 stars" maps to "5": only it required mapping
        assert!((report.mapped_fraction - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.metrics["accuracy"] - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.metrics["mae"] - (0.0 + 0.0 + 2.0) / 3.0).abs() < 1e-12);
        assert!((report.metrics["rmse"] - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(report.per_sample[1].prediction_mapped, "5");
    }

    #[test]
    fn evaluate_generation_run_averages_rouge() {
        let task = tasks::by_id("LaMP-5U").unwrap();
        let records = vec![
            ("s1".to_string(), "the cat sat on mat".to_string(), "the cat".to_string()),
            ("s2".to_string(), "a b c d".to_string(), "a c b d".to_string()),
        ];
        let report = evaluate_run(&task, &records).unwrap();
        let expected_r1 = (4.0 / 7.0 + 1.0) / 2.0;
        let expected_rl = (4.0 / 7.0 + 0.75) / 2.0;
        assert!((report.metrics["rouge1"] - expected_r1).abs() < 1e-12);
        assert!((report.metrics["rougeL"] - expected_rl).abs() < 1e-12);
        assert_eq!(report.mapped_fraction, 0.0);
    }

    #[test]
    fn aggregates_equal_per_sample_means() {
        let task = tasks::by_id("LaMP-3U").unwrap();
        let records: Vec<(String, String, String)> = (0..17)
            .map(|i| {
                (format!("s{i}"), format!("{}", (i % 5) + 1), format!("{}", ((i * 3) % 5) + 1))
            })
            .collect();
        let report = evaluate_run(&task, &records).unwrap();
        let mean = |key: &str| {
            report.per_sample.iter().map(|s| s.scores[key]).sum::<f64>()
                / report.per_sample.len() as f64
        };
        assert!((report.metrics["accuracy"] - mean("correct")).abs() < 1e-12);
        assert!((report.metrics["mae"] - mean("abs_error")).abs() < 1e-12);
        assert!((report.metrics["rmse"] * report.metrics["rmse"] - mean("sq_error")).abs() < 1e-12);
    }

    #[test]
    fn lamp1_all_correct_positions() {
        let task = tasks::by_id("LaMP-1U").unwrap();
        let records = vec![
            ("s1".to_string(), "[1]".to_string(), "[1]".to_string()),
            ("s2".to_string(), "[2]".to_string(), "[2]".to_string()),
        ];
        let report = evaluate_run(&task, &records).unwrap();
        assert_eq!(report.metrics["accuracy"], 1.0);
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(pairs in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..50)) {
            let p: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
            let g: Vec<f64> = pairs.iter().map(|(_, b)| *b).collect();
            prop_assert!(rmse(&p, &g).unwrap() >= mae(&p, &g).unwrap() - 1e-12);
        }

        #[test]
        fn rouge_f1_bounds(c in "[ab ]{0,30}", r in "[ab ]{0,30}") {
            for score in [rouge1(&c, &r), rouge_l(&c, &r)] {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&score.f1));
            }
        }

        #[test]
        fn rouge1_is_one_iff_permutation(c in "[abc ]{1,30}", r in "[abc ]{1,30}") {
            let mut ct = tokenize(&c);
            let mut rt = tokenize(&r);
            prop_assume!(!ct.is_empty() && !rt.is_empty());
            let f1 = rouge1(&c, &r).f1;
            ct.sort();
            rt.sort();
            prop_assert_eq!((f1 - 1.0).abs() < 1e-12, ct == rt);
        }

        #[test]
        fn rouge_l_is_one_iff_identical(c in "[abc ]{1,30}", r in "[abc ]{1,30}") {
            let ct = tokenize(&c);
            let rt = tokenize(&r);
            prop_assume!(!ct.is_empty() && !rt.is_empty());
            let f1 = rouge_l(&c, &r).f1;
            prop_assert_eq!((f1 - 1.0).abs() < 1e-12, ct == rt);
        }
    }
}

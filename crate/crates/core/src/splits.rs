//! Builds train/dev/test datasets from per-user histories.
//!
//! Two regimes: user-based separation partitions *users* (no user appears
//! in two splits); time-based separation partitions each user's entries
//! chronologically, with strictly older entries forming the profile of
//! every constructed sample. Both are deterministic given (histories,
//! config): histories are sorted by user id before any seeded choice, and
//! per-user randomness is salted with the user id so input order and
//! execution order cannot change the output.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_dataset, Dataset, ModelError, ProfileEntry, Sample};
use crate::retrieval::sample_seed;
use crate::tasks::{SplitRegime, TaskSpec};

/// Raw material for one user: their full dated history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserHistory {
    pub user_id: String,
    pub entries: Vec<ProfileEntry>,
}

/// How each user's entries become (input, target) samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SampleMode {
    /// One seeded-random entry per user becomes the sample.
    SingleRandom,
    /// Every entry becomes a candidate; a seeded `keep_rate` fraction
    /// (rounded) is kept.
    PerEntry { keep_rate: f64 },
}

/// Entry fractions for the time-based regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "fractions")]
pub enum TimeFractions {
    /// Exactly one newest entry each for test, dev, and train.
    SingleNewest,
    /// Newest `test`, then `dev`, then `train` fractions (floored);
    /// everything older is profile. When the three fractions sum to one
    /// the flooring remainder goes to train.
    Fractions { train: f64, dev: f64, test: f64 },
}

/// Split construction parameters. `defaults_for` gives the per-task
/// values; everything is overridable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub regime: SplitRegime,
    /// (train, dev, test) user fractions for the user-based regime.
    pub user_ratios: (f64, f64, f64),
    pub time_fractions: TimeFractions,
    /// Minimum history size to keep a user.
    pub min_profile: usize,
    /// Maximum history size, when bounded.
    pub max_profile: Option<usize>,
    /// Fraction of the largest users dropped as outliers (ceil).
    pub outlier_trim_percent: f64,
    pub sample_mode: SampleMode,
    /// Optional seeded uniform subsample sizes applied after aggregation.
    pub dev_subsample: Option<usize>,
    pub test_subsample: Option<usize>,
    pub seed: u64,
}

impl SplitConfig {
    /// Per-task defaults: history-size thresholds, outlier trimming,
    /// sample construction mode, and time fractions.
    pub fn defaults_for(task: &TaskSpec, seed: u64) -> SplitConfig {
        let (min_profile, max_profile) = match (task.number, task.regime) {
            (1, _) | (5, _) => (50, None),
            (2, _) => (5, None),
            (3, _) => (100, None),
            (4, SplitRegime::UserBased) => (4, None),
            (4, SplitRegime::TimeBased) => (10, None),
            (6, _) => (10, Some(200)),
            (7, _) => (10, None),
            _ => (1, None),
        };
        let outlier_trim_percent = if task.number == 3 { 0.01 } else { 0.0 };
        let sample_mode = match task.number {
            2 | 4 | 6 => SampleMode::PerEntry { keep_rate: 0.5 },
            _ => SampleMode::SingleRandom,
        };
        let time_fractions = match task.number {
            2 | 4 | 6 => TimeFractions::Fractions { train: 0.2, dev: 0.1, test: 0.1 },
            _ => TimeFractions::SingleNewest,
        };
        SplitConfig {
            regime: task.regime,
            user_ratios: (0.8, 0.1, 0.1),
            time_fractions,
            min_profile,
            max_profile,
            outlier_trim_percent,
            sample_mode,
            dev_subsample: None,
            test_subsample: None,
            seed,
        }
    }
}

/// Chronological partition boundaries into a user's (date, id)-sorted
/// entry list: profile `[0, profile_end)`, train `[profile_end,
/// train_end)`, dev `[train_end, dev_end)`, test `[dev_end, test_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionBounds {
    pub profile_end: usize,
    pub train_end: usize,
    pub dev_end: usize,
    pub test_end: usize,
}

/// Record of how the split was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub task_id: String,
    pub regime: SplitRegime,
    pub seed: u64,
    /// user-based: user id -> "train" | "dev" | "test".
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub user_assignment: BTreeMap<String, String>,
    /// time-based: per-user partition boundaries.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub partitions: BTreeMap<String, PartitionBounds>,
}

/// The three datasets plus the manifest describing their construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutput {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    pub manifest: SplitManifest,
}

/// Paper titles and per-author citation sets used to draw citation-pair
/// negatives.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationPool {
    /// Paper id -> title.
    pub titles: BTreeMap<String, String>,
    /// Author id -> ids of papers that author has cited.
    pub citations: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("invalid split configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {need} users, have {have}")]
    TooFewUsers { have: usize, need: usize },
    #[error("duplicate user id {0:?}")]
    DuplicateUser(String),
    #[error("user {user_id}: duplicate entry id {entry_id:?}")]
    DuplicateEntry { user_id: String, entry_id: String },
    #[error("user {user_id}: entry {entry_id:?} has no date")]
    UndatedEntry { user_id: String, entry_id: String },
    #[error("user {user_id}: entry {entry_id:?} lacks field {field:?}")]
    MissingField { user_id: String, entry_id: String, field: String },
    #[error("user {0:?} has no paper with references")]
    NoReferencedPapers(String),
    #[error("citation pool is empty")]
    EmptyPool,
    #[error("no eligible negative citation for user {0:?}")]
    NoEligibleNegative(String),
    #[error("paper id {0:?} not present in the citation pool titles")]
    UnknownPaper(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Keep users whose history size is within `[min_profile, max_profile]`,
/// then drop the top `outlier_trim_percent` by entry count (ceil). Output
/// is sorted by user id.
pub fn filter_users(histories: &[UserHistory], config: &SplitConfig) -> Vec<UserHistory> {
    let mut kept: Vec<UserHistory> = histories
        .iter()
        .filter(|h| {
            h.entries.len() >= config.min_profile
                && config.max_profile.map_or(true, |m| h.entries.len() <= m)
        })
        .cloned()
        .collect();
    kept.sort_by(|a, b| a.user_id.cmp(&b.user_id));

    if config.outlier_trim_percent > 0.0 && !kept.is_empty() {
        let drop = ((config.outlier_trim_percent * kept.len() as f64).ceil()) as usize;
        let mut by_size: Vec<(usize, String)> =
            kept.iter().map(|h| (h.entries.len(), h.user_id.clone())).collect();
        by_size.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let outliers: BTreeSet<String> =
            by_size.into_iter().take(drop).map(|(_, id)| id).collect();
        kept.retain(|h| !outliers.contains(&h.user_id));
    }
    kept
}

fn sorted_unique_histories(histories: &[UserHistory]) -> Result<Vec<UserHistory>, SplitError> {
    let mut sorted = histories.to_vec();
    sorted.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    for pair in sorted.windows(2) {
        if pair[0].user_id == pair[1].user_id {
            return Err(SplitError::DuplicateUser(pair[0].user_id.clone()));
        }
    }
    for h in &sorted {
        let mut seen = BTreeSet::new();
        for e in &h.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(SplitError::DuplicateEntry {
                    user_id: h.user_id.clone(),
                    entry_id: e.id.clone(),
                });
            }
        }
    }
    Ok(sorted)
}

/// Hook where a paraphrase generator would rewrite the raw input; the
/// built-in transform is the identity.
fn transform_input(raw: &str) -> String {
    raw.to_string()
}

fn extract_sample(
    task: &TaskSpec,
    user: &UserHistory,
    entry_idx: usize,
    profile: Vec<ProfileEntry>,
) -> Result<Sample, SplitError> {
    let entry = &user.entries[entry_idx];
    let field = |name: &Option<String>| -> Result<String, SplitError> {
        let name = name.as_ref().expect("field-extract tasks define input/target fields");
        entry
            .field(name)
            .map(str::to_string)
            .ok_or_else(|| SplitError::MissingField {
                user_id: user.user_id.clone(),
                entry_id: entry.id.clone(),
                field: name.clone(),
            })
    };
    let input = transform_input(&field(&task.input_field)?);
    let target = field(&task.target_field)?;
    Ok(Sample {
        id: format!("{}:{}", user.user_id, entry.id),
        user_id: user.user_id.clone(),
        input,
        target,
        profile,
    })
}

fn build_sample(
    task: &TaskSpec,
    user: &UserHistory,
    entry_idx: usize,
    profile: Vec<ProfileEntry>,
    pool: Option<&CitationPool>,
    rng: &mut ChaCha8Rng,
) -> Result<Sample, SplitError> {
    if task.number == 1 {
        let pool = pool.ok_or_else(|| {
            SplitError::InvalidConfig("citation-pair task needs a citation pool".into())
        })?;
        citation_pair_for(user, entry_idx, profile, pool, rng)
    } else {
        extract_sample(task, user, entry_idx, profile)
    }
}

/// Partition users into disjoint train/dev/test sets and build one
/// dataset per split. Dev and test user counts are floored, the
/// remainder goes to train.
pub fn user_based_split(
    task: &TaskSpec,
    histories: &[UserHistory],
    config: &SplitConfig,
    pool: Option<&CitationPool>,
) -> Result<SplitOutput, SplitError> {
    if config.regime != SplitRegime::UserBased {
        return Err(SplitError::InvalidConfig("config regime is not user-based".into()));
    }
    let sorted = sorted_unique_histories(histories)?;
    if sorted.len() < 3 {
        return Err(SplitError::TooFewUsers { have: sorted.len(), need: 3 });
    }

    let (train_r, dev_r, test_r) = config.user_ratios;
    if train_r < 0.0 || dev_r < 0.0 || test_r < 0.0 || train_r + dev_r + test_r > 1.0 + 1e-9 {
        return Err(SplitError::InvalidConfig(format!(
            "user ratios must be non-negative and sum to at most 1, got ({train_r}, {dev_r}, {test_r})"
        )));
    }

    let n = sorted.len();
    let n_dev = (n as f64 * dev_r).floor() as usize;
    let n_test = (n as f64 * test_r).floor() as usize;
    let n_train = n - n_dev - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    order.shuffle(&mut rng);

    let mut user_assignment = BTreeMap::new();
    let mut split_samples: [Vec<Sample>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (rank, &idx) in order.iter().enumerate() {
        let split = if rank < n_train {
            0
        } else if rank < n_train + n_dev {
            1
        } else {
            2
        };
        let user = &sorted[idx];
        user_assignment
            .insert(user.user_id.clone(), ["train", "dev", "test"][split].to_string());
        let samples = user_samples(task, user, config, pool)?;
        split_samples[split].extend(samples);
    }

    // Merge order must not depend on the shuffle: sort by sample id.
    for samples in &mut split_samples {
        samples.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let [train, mut dev, mut test] = split_samples;
    subsample(&mut dev, config.dev_subsample, sample_seed(config.seed, "dev-subsample"));
    subsample(&mut test, config.test_subsample, sample_seed(config.seed, "test-subsample"));

    let manifest = SplitManifest {
        task_id: task.task_id.clone(),
        regime: config.regime,
        seed: config.seed,
        user_assignment,
        partitions: BTreeMap::new(),
    };
    finish(task, config, train, dev, test, manifest)
}

/// Samples contributed by one user in the user-based regime: the chosen
/// entries become inputs, all other entries the profile.
fn user_samples(
    task: &TaskSpec,
    user: &UserHistory,
    config: &SplitConfig,
    pool: Option<&CitationPool>,
) -> Result<Vec<Sample>, SplitError> {
    if user.entries.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(config.seed, &user.user_id));
    let chosen: Vec<usize> = match config.sample_mode {
        SampleMode::SingleRandom => vec![rng.gen_range(0..user.entries.len())],
        SampleMode::PerEntry { keep_rate } => {
            let n = user.entries.len();
            let keep = ((n as f64) * keep_rate).round() as usize;
            let mut indices: Vec<usize> = (0..n).collect();
            indices.shuffle(&mut rng);
            indices.truncate(keep.min(n));
            indices.sort_unstable();
            indices
        }
    };
    let mut samples = Vec::with_capacity(chosen.len());
    for idx in chosen {
        let profile: Vec<ProfileEntry> = user
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, e)| e.clone())
            .collect();
        samples.push(build_sample(task, user, idx, profile, pool, &mut rng)?);
    }
    Ok(samples)
}

/// Partition each user's entries chronologically; the newest become test,
/// then dev, then train inputs, and every sample's profile is all entries
/// strictly older than its partition.
pub fn time_based_split(
    task: &TaskSpec,
    histories: &[UserHistory],
    config: &SplitConfig,
    pool: Option<&CitationPool>,
) -> Result<SplitOutput, SplitError> {
    if config.regime != SplitRegime::TimeBased {
        return Err(SplitError::InvalidConfig("config regime is not time-based".into()));
    }
    let sorted_users = sorted_unique_histories(histories)?;

    let mut partitions = BTreeMap::new();
    let mut split_samples: [Vec<Sample>; 3] = [Vec::new(), Vec::new(), Vec::new()];

    for user in &sorted_users {
        let mut entries = user.entries.clone();
        for e in &entries {
            if e.date.is_none() {
                return Err(SplitError::UndatedEntry {
                    user_id: user.user_id.clone(),
                    entry_id: e.id.clone(),
                });
            }
        }
        entries.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.id.cmp(&b.id)));
        let sorted_user = UserHistory { user_id: user.user_id.clone(), entries };
        let n = sorted_user.entries.len();

        let (n_train, n_dev, n_test) = match config.time_fractions {
            TimeFractions::SingleNewest => {
                let n_test = n.min(1);
                let n_dev = (n - n_test).min(1);
                let n_train = (n - n_test - n_dev).min(1);
                (n_train, n_dev, n_test)
            }
            TimeFractions::Fractions { train, dev, test } => {
                if train < 0.0 || dev < 0.0 || test < 0.0 || train + dev + test > 1.0 + 1e-9 {
                    return Err(SplitError::InvalidConfig(format!(
                        "time fractions must be non-negative and sum to at most 1, got ({train}, {dev}, {test})"
                    )));
                }
                let n_test = (n as f64 * test).floor() as usize;
                let n_dev = (n as f64 * dev).floor() as usize;
                let mut n_train = (n as f64 * train).floor() as usize;
                if train + dev + test >= 1.0 - 1e-9 {
                    // No profile share configured: flooring remainder goes
                    // to train.
                    n_train = n - n_test - n_dev;
                }
                (n_train, n_dev, n_test)
            }
        };

        let profile_end = n - n_train - n_dev - n_test;
        let bounds = PartitionBounds {
            profile_end,
            train_end: profile_end + n_train,
            dev_end: profile_end + n_train + n_dev,
            test_end: n,
        };
        partitions.insert(user.user_id.clone(), bounds);

        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(config.seed, &user.user_id));
        let ranges = [
            (0, profile_end, bounds.train_end),
            (1, bounds.train_end, bounds.dev_end),
            (2, bounds.dev_end, bounds.test_end),
        ];
        for (split, start, end) in ranges {
            for idx in start..end {
                // Everything strictly older than the input's partition.
                let profile = sorted_user.entries[..start].to_vec();
                let sample = build_sample(task, &sorted_user, idx, profile, pool, &mut rng)?;
                split_samples[split].push(sample);
            }
        }
    }

    for samples in &mut split_samples {
        samples.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let [train, mut dev, mut test] = split_samples;
    subsample(&mut dev, config.dev_subsample, sample_seed(config.seed, "dev-subsample"));
    subsample(&mut test, config.test_subsample, sample_seed(config.seed, "test-subsample"));

    let manifest = SplitManifest {
        task_id: task.task_id.clone(),
        regime: config.regime,
        seed: config.seed,
        user_assignment: BTreeMap::new(),
        partitions,
    };
    finish(task, config, train, dev, test, manifest)
}

fn subsample(samples: &mut Vec<Sample>, limit: Option<usize>, seed: u64) {
    let Some(limit) = limit else { return };
    if samples.len() <= limit {
        return;
    }
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    indices.truncate(limit);
    indices.sort_unstable();
    *samples = indices.into_iter().map(|i| samples[i].clone()).collect();
}

fn finish(
    task: &TaskSpec,
    config: &SplitConfig,
    train: Vec<Sample>,
    dev: Vec<Sample>,
    test: Vec<Sample>,
    manifest: SplitManifest,
) -> Result<SplitOutput, SplitError> {
    let provenance = format!(
        "built by split regime={} seed={} min_profile={}",
        config.regime, config.seed, config.min_profile
    );
    let dataset = |samples: Vec<Sample>| Dataset {
        task: task.clone(),
        provenance: Some(provenance.clone()),
        samples,
    };
    let out = SplitOutput {
        train: dataset(train),
        dev: dataset(dev),
        test: dataset(test),
        manifest,
    };
    for d in [&out.train, &out.dev, &out.test] {
        validate_dataset(d)?;
    }
    Ok(out)
}

fn space_separated(entry: &ProfileEntry, field: &str) -> Vec<String> {
    entry
        .field(field)
        .map(|v| v.split_whitespace().map(str::to_string).collect())
        .unwrap_or_default()
}

/// The citation-pair input text. The user's paper title sits in the first
/// quoted segment so prompt aggregation can splice retrieved titles after
/// it.
fn render_citation_input(paper_title: &str, first: &str, second: &str) -> String {
    format!(
        "For an author who has written the paper with the title \"{paper_title}\", \
         which reference is related? Just answer with [1] or [2] without explanation. \
         [1]: \"{first}\" [2]: \"{second}\""
    )
}

/// Build one citation-pair sample for a seeded-random paper of `user`.
/// The positive candidate is a reference of the chosen paper; the
/// negative is a paper cited by a seeded-random co-author (falling back
/// to any pool author) and never cited by the user. Candidate order is
/// seeded-random and the target names the positive's position.
pub fn make_citation_pair(
    user: &UserHistory,
    pool: &CitationPool,
    seed: u64,
) -> Result<Sample, SplitError> {
    if pool.citations.is_empty() {
        return Err(SplitError::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<usize> = (0..user.entries.len())
        .filter(|&i| !space_separated(&user.entries[i], "references").is_empty())
        .collect();
    if candidates.is_empty() {
        return Err(SplitError::NoReferencedPapers(user.user_id.clone()));
    }
    let paper_idx = candidates[rng.gen_range(0..candidates.len())];
    let profile: Vec<ProfileEntry> = user
        .entries
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != paper_idx)
        .map(|(_, e)| e.clone())
        .collect();
    citation_pair_for(user, paper_idx, profile, pool, &mut rng)
}

/// Citation-pair construction with the input paper and profile already
/// chosen; used by the split builders, which pick the paper by partition.
fn citation_pair_for(
    user: &UserHistory,
    paper_idx: usize,
    profile: Vec<ProfileEntry>,
    pool: &CitationPool,
    rng: &mut ChaCha8Rng,
) -> Result<Sample, SplitError> {
    if pool.citations.is_empty() {
        return Err(SplitError::EmptyPool);
    }
    let paper = &user.entries[paper_idx];
    let refs = space_separated(paper, "references");
    if refs.is_empty() {
        return Err(SplitError::NoReferencedPapers(user.user_id.clone()));
    }
    let positive_id = refs[rng.gen_range(0..refs.len())].clone();

    // All-time citation set: references across every paper of the user.
    let user_cited: BTreeSet<String> = user
        .entries
        .iter()
        .flat_map(|e| space_separated(e, "references"))
        .collect();

    // All-time co-author pool, tried in seeded order; any pool author is
    // the fallback when no co-author has an eligible paper.
    let mut coauthors: Vec<String> = user
        .entries
        .iter()
        .flat_map(|e| space_separated(e, "coauthors"))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    coauthors.shuffle(rng);
    let mut fallback: Vec<String> = pool
        .citations
        .keys()
        .filter(|a| !coauthors.contains(a))
        .cloned()
        .collect();
    fallback.shuffle(rng);

    let eligible = |author: &String| -> Vec<String> {
        pool.citations
            .get(author)
            .map(|cited| cited.iter().filter(|p| !user_cited.contains(*p)).cloned().collect())
            .unwrap_or_default()
    };
    let negative_id = coauthors
        .iter()
        .chain(fallback.iter())
        .find_map(|a| {
            let pool_papers = eligible(a);
            if pool_papers.is_empty() {
                None
            } else {
                Some(pool_papers[rng.gen_range(0..pool_papers.len())].clone())
            }
        })
        .ok_or_else(|| SplitError::NoEligibleNegative(user.user_id.clone()))?;

    let title_of = |id: &str| -> Result<&String, SplitError> {
        pool.titles.get(id).ok_or_else(|| SplitError::UnknownPaper(id.to_string()))
    };
    let positive_title = title_of(&positive_id)?;
    let negative_title = title_of(&negative_id)?;
    let paper_title = paper.field("title").ok_or_else(|| SplitError::MissingField {
        user_id: user.user_id.clone(),
        entry_id: paper.id.clone(),
        field: "title".into(),
    })?;

    let positive_first: bool = rng.gen_bool(0.5);
    let (first, second, target) = if positive_first {
        (positive_title.as_str(), negative_title.as_str(), "[1]")
    } else {
        (negative_title.as_str(), positive_title.as_str(), "[2]")
    };

    Ok(Sample {
        id: format!("{}:{}", user.user_id, paper.id),
        user_id: user.user_id.clone(),
        input: render_citation_input(paper_title, first, second),
        target: target.to_string(),
        profile,
    })
}

//! Experiment execution: shuffled presentation rounds, round-trip translation,
//! pronoun extraction and durable per-trial persistence.

mod ingest;
mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::Clock;
use crate::corpus::Corpus;
use crate::extract::{extract_pronoun, PronounCategory};
use crate::metrics::PronounTally;
use crate::translate::{LanguageCode, TranslateError, TranslationRequest, Translator};

pub use ingest::{ingest_external, ColumnMap, IngestMapping, IngestReport};
pub use store::{read_dataset, write_dataset, DatasetAppender};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("round {round}: all {attempted} trials failed (last error: {last})")]
    RoundFailed { round: u32, attempted: usize, last: String },
    #[error("translation backend: {0}")]
    Backend(#[from] TranslateError),
    #[error("existing dataset at {path} belongs to run '{found}', not '{expected}'")]
    RunMismatch { path: String, found: String, expected: String },
    #[error("existing dataset at {path} has a different configuration: {what}")]
    ConfigMismatch { path: String, what: String },
    #[error("dataset file {path}: {reason}")]
    Store { path: String, reason: String },
    #[error("ingest: {0}")]
    Ingest(String),
    #[error("dataset has no trials")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub run_id: String,
    pub sentence_id: u32,
    /// 1-based round number.
    pub trial_index: u32,
    /// 1-based position within the shuffled round; unknown for ingested data.
    pub presentation_order: Option<u32>,
    pub pivot_language: Option<LanguageCode>,
    pub forward_text: Option<String>,
    pub back_text: Option<String>,
    /// Present for successful trials.
    pub pronoun: Option<PronounCategory>,
    pub status: TrialStatus,
    pub created_at: DateTime<Utc>,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Run,
    External { source: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub provenance: Provenance,
    pub seed: Option<u64>,
    pub backend: String,
    pub english_variant: Option<String>,
    pub corpus: Option<String>,
    pub created_at: DateTime<Utc>,
    /// Pronoun labels that had to be mapped to OTHER on ingest.
    #[serde(default)]
    pub unknown_labels: u64,
}

/// One labelled collection of trials (e.g. `FI`, `FI0`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub label: String,
    pub run_id: String,
    pub pivot_language: Option<LanguageCode>,
    pub trials_per_sentence: u32,
    /// Sentence ids the dataset is expected to cover.
    pub sentence_ids: Vec<u32>,
    pub metadata: DatasetMetadata,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

impl Dataset {
    /// True once every expected sentence has exactly `trials_per_sentence`
    /// records (ok or failed) and nothing else is present.
    pub fn is_complete(&self) -> bool {
        if self.records.is_empty() || self.trials_per_sentence == 0 {
            return false;
        }
        let mut per: HashMap<u32, BTreeSet<u32>> = HashMap::new();
        for r in &self.records {
            if !per.entry(r.sentence_id).or_default().insert(r.trial_index) {
                return false;
            }
        }
        per.len() == self.sentence_ids.len()
            && self.sentence_ids.iter().all(|id| {
                per.get(id).map(|t| t.len() == self.trials_per_sentence as usize).unwrap_or(false)
            })
    }

    pub fn ok_records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| r.is_ok())
    }

    pub fn failed_count(&self) -> usize {
        self.records.len() - self.ok_records().count()
    }

    /// Pronoun tallies over successful trials, one per expected sentence.
    pub fn tallies(&self) -> BTreeMap<u32, PronounTally> {
        let mut out: BTreeMap<u32, PronounTally> =
            self.sentence_ids.iter().map(|&id| (id, PronounTally::new(id))).collect();
        for r in self.ok_records() {
            if let Some(p) = &r.pronoun {
                out.entry(r.sentence_id).or_insert_with(|| PronounTally::new(r.sentence_id)).add(p.clone(), 1);
            }
        }
        out
    }

    /// Pronoun totals over successful trials.
    pub fn pronoun_totals(&self) -> BTreeMap<PronounCategory, u64> {
        let mut out = BTreeMap::new();
        for p in self.ok_records().filter_map(|r| r.pronoun.as_ref()) {
            *out.entry(p.clone()).or_insert(0) += 1;
        }
        out
    }

    fn completed_pairs(&self) -> HashMap<(u32, u32), &TrialRecord> {
        self.records.iter().map(|r| ((r.sentence_id, r.trial_index), r)).collect()
    }
}

/// Settings for [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub label: String,
    pub run_id: String,
    pub pivot: LanguageCode,
    /// Target of the back leg, e.g. `EN-GB`.
    pub english: LanguageCode,
    pub trials: u32,
    pub seed: u64,
    /// Concurrent in-flight translations within a round.
    pub workers: usize,
}

impl RunConfig {
    pub fn new(label: &str, pivot: LanguageCode, trials: u32, seed: u64) -> Self {
        RunConfig {
            label: label.to_string(),
            run_id: format!("{label}-seed{seed}"),
            pivot,
            english: LanguageCode::new("EN-GB").expect("valid code"),
            trials,
            seed,
            workers: 4,
        }
    }
}

/// Presentation order of `ids` for round `round`, reproducible from `seed`.
pub fn round_order(ids: &[u32], seed: u64, round: u32) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round as u64);
    let mut order = ids.to_vec();
    order.shuffle(&mut rng);
    order
}

/// Runs (or resumes) an experiment, persisting to `out`.
///
/// Each round shuffles the corpus, sends every pending sentence through the
/// forward and back legs (up to `workers` at a time), extracts the pronoun
/// and appends the round's records to `out` in presentation order. Rerunning
/// with the same run id skips (sentence, trial) pairs already on disk.
pub fn run_experiment(
    corpus: &Corpus,
    config: &RunConfig,
    backend: &dyn Translator,
    out: &Path,
    clock: &dyn Clock,
) -> Result<Dataset, RunError> {
    if config.trials == 0 {
        return Err(RunError::Config("trials must be at least 1".into()));
    }
    if config.pivot.base() == "EN" {
        return Err(RunError::Config("pivot language must not be English".into()));
    }
    let ids = corpus.ids();
    let mut dataset = if out.exists() {
        let existing = read_dataset(out)?;
        check_resumable(&existing, corpus, config, out)?;
        log::info!("resuming run '{}' with {} records on disk", config.run_id, existing.records.len());
        existing
    } else {
        let dataset = Dataset {
            label: config.label.clone(),
            run_id: config.run_id.clone(),
            pivot_language: Some(config.pivot.clone()),
            trials_per_sentence: config.trials,
            sentence_ids: ids.clone(),
            metadata: DatasetMetadata {
                provenance: Provenance::Run,
                seed: Some(config.seed),
                backend: backend.identity(),
                english_variant: Some(config.english.to_string()),
                corpus: Some(corpus.name.clone()),
                created_at: clock.now(),
                unknown_labels: 0,
            },
            records: Vec::new(),
        };
        write_dataset(out, &dataset)?;
        dataset
    };
    let mut appender = DatasetAppender::open(out)?;
    let source = LanguageCode::new(config.english.base()).map_err(RunError::Backend)?;

    for round in 1..=config.trials {
        let order = round_order(&ids, config.seed, round);
        let done = dataset.completed_pairs();
        let mut pending = Vec::new();
        for (pos, &id) in order.iter().enumerate() {
            let sentence = corpus.get(id).expect("id from corpus");
            let forward_req = TranslationRequest::new(&sentence.text(), source.clone(), config.pivot.clone())?;
            match done.get(&(id, round)) {
                Some(prev) => {
                    backend.advance(&forward_req);
                    if let Some(fwd) = prev.forward_text.as_deref() {
                        if let Ok(back_req) = TranslationRequest::new(fwd, config.pivot.clone(), config.english.clone()) {
                            backend.advance(&back_req);
                        }
                    }
                }
                None => pending.push((pos as u32 + 1, id, forward_req)),
            }
        }
        if pending.is_empty() {
            continue;
        }

        let forward_reqs: Vec<TranslationRequest> = pending.iter().map(|p| p.2.clone()).collect();
        let forward = backend.translate_batch(&forward_reqs, config.workers);
        let mut back_reqs = Vec::new();
        let mut back_slots = Vec::new();
        for (i, res) in forward.iter().enumerate() {
            if let Ok(text) = res {
                match TranslationRequest::new(text, config.pivot.clone(), config.english.clone()) {
                    Ok(req) => {
                        back_slots.push(i);
                        back_reqs.push(req);
                    }
                    Err(e) => log::warn!("round {round}: unusable forward text: {e}"),
                }
            }
        }
        let back = backend.translate_batch(&back_reqs, config.workers);
        let mut back_by_slot: HashMap<usize, Result<String, TranslateError>> =
            back_slots.into_iter().zip(back).collect();

        let mut round_records = Vec::with_capacity(pending.len());
        let mut successes = 0usize;
        let mut last_error = String::new();
        for (i, ((pos, id, _), fwd)) in pending.iter().zip(forward).enumerate() {
            let (forward_text, outcome) = match fwd {
                Err(e) => (None, Err(e)),
                Ok(text) => {
                    let back = back_by_slot
                        .remove(&i)
                        .unwrap_or_else(|| Err(TranslateError::BadResponse("empty forward translation".into())));
                    (Some(text), back)
                }
            };
            let (back_text, pronoun, status) = match outcome {
                Ok(back) => {
                    successes += 1;
                    let p = extract_pronoun(&back);
                    (Some(back), Some(p), TrialStatus::Ok)
                }
                Err(e) if e.is_fatal() => return Err(RunError::Backend(e)),
                Err(e) => {
                    last_error = e.to_string();
                    (None, None, TrialStatus::Failed(e.to_string()))
                }
            };
            round_records.push(TrialRecord {
                run_id: config.run_id.clone(),
                sentence_id: *id,
                trial_index: round,
                presentation_order: Some(*pos),
                pivot_language: Some(config.pivot.clone()),
                forward_text,
                back_text,
                pronoun,
                status,
                created_at: clock.now(),
            });
        }
        appender.append(&round_records)?;
        dataset.records.extend(round_records);
        if successes == 0 && pending.len() == ids.len() {
            return Err(RunError::RoundFailed { round, attempted: pending.len(), last: last_error });
        }
    }
    Ok(dataset)
}

fn check_resumable(existing: &Dataset, corpus: &Corpus, config: &RunConfig, out: &Path) -> Result<(), RunError> {
    let path = out.display().to_string();
    if existing.run_id != config.run_id {
        return Err(RunError::RunMismatch { path, found: existing.run_id.clone(), expected: config.run_id.clone() });
    }
    let mismatch = |what: &str| Err(RunError::ConfigMismatch { path: path.clone(), what: what.to_string() });
    if existing.trials_per_sentence != config.trials {
        return mismatch("trials per sentence");
    }
    if existing.metadata.seed != Some(config.seed) {
        return mismatch("seed");
    }
    if existing.pivot_language.as_ref() != Some(&config.pivot) {
        return mismatch("pivot language");
    }
    if existing.sentence_ids != corpus.ids() {
        return mismatch("corpus sentence ids");
    }
    Ok(())
}

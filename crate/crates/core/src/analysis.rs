//! Analyses over datasets: pronoun count tables, per-sentence UCA and its
//! distribution, extreme sentences, verb groups with ANOVA / Tukey, and
//! cross-dataset comparison.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::extract::PronounCategory;
use crate::metrics::{uca, MetricsError};
use crate::runner::Dataset;
use crate::stats::{anova_oneway, pearson, quantile_type7, summarize, tukey_hsd, StatsError};
use crate::{Anova, Score, Summary, Tukey};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("dataset {0} is incomplete")]
    Incomplete(String),
    #[error("no datasets to analyse")]
    NoDatasets,
    #[error("sentence {sentence}: {source}")]
    Metrics { sentence: u32, source: MetricsError },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("verb-group analysis needs at least 2 verbs with {min} or more sentences, found {found}")]
    TooFewVerbs { found: usize, min: usize },
    #[error("datasets {a} and {b} cover different sentences")]
    CorpusMismatch { a: String, b: String },
    #[error("dataset {label} has sentence {sentence} which is not in the corpus")]
    UnknownSentence { label: String, sentence: u32 },
}

fn require_complete(ds: &Dataset) -> Result<(), AnalysisError> {
    if ds.is_complete() {
        Ok(())
    } else {
        Err(AnalysisError::Incomplete(ds.label.clone()))
    }
}

/// Pronoun category × dataset counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub labels: Vec<String>,
    pub rows: Vec<CountRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub category: PronounCategory,
    /// One count per dataset, aligned with `CountTable::labels`.
    pub counts: Vec<u64>,
}

impl CountTable {
    pub fn count(&self, category: &PronounCategory, label: &str) -> Option<u64> {
        let col = self.labels.iter().position(|l| l == label)?;
        let row = self.rows.iter().find(|r| &r.category == category);
        Some(row.map(|r| r.counts[col]).unwrap_or(0))
    }

    pub fn column_total(&self, label: &str) -> Option<u64> {
        let col = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r.counts[col]).sum())
    }
}

/// Counts over successful trials; categories that are zero everywhere are
/// left out.
pub fn pronoun_count_table(datasets: &[&Dataset]) -> Result<CountTable, AnalysisError> {
    if datasets.is_empty() {
        return Err(AnalysisError::NoDatasets);
    }
    let mut per: Vec<BTreeMap<PronounCategory, u64>> = Vec::with_capacity(datasets.len());
    for ds in datasets {
        require_complete(ds)?;
        per.push(ds.pronoun_totals());
    }
    let categories: BTreeSet<&PronounCategory> = per.iter().flat_map(|m| m.keys()).collect();
    let rows = categories
        .into_iter()
        .map(|c| CountRow { category: c.clone(), counts: per.iter().map(|m| m.get(c).copied().unwrap_or(0)).collect() })
        .filter(|r| r.counts.iter().any(|&n| n > 0))
        .collect();
    Ok(CountTable { labels: datasets.iter().map(|d| d.label.clone()).collect(), rows })
}

/// UCA of every expected sentence over its successful trials.
pub fn uca_by_sentence(dataset: &Dataset, k: usize) -> Result<BTreeMap<u32, Score>, AnalysisError> {
    require_complete(dataset)?;
    dataset
        .tallies()
        .into_iter()
        .map(|(id, tally)| {
            uca::<f64>(&tally, k).map(|s| (id, s)).map_err(|source| AnalysisError::Metrics { sentence: id, source })
        })
        .collect()
}

/// Plain `sentence → uca` view of [`uca_by_sentence`] output.
pub fn uca_values(scores: &BTreeMap<u32, Score>) -> BTreeMap<u32, f64> {
    scores.iter().map(|(&id, s)| (id, s.uca)).collect()
}

/// Distribution of per-sentence UCA for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcaDistribution {
    pub label: String,
    pub summary: Summary,
}

pub fn uca_distribution(label: &str, uca: &BTreeMap<u32, f64>) -> Result<UcaDistribution, AnalysisError> {
    let values: Vec<f64> = uca.values().copied().collect();
    Ok(UcaDistribution { label: label.to_string(), summary: summarize(&values)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceMean {
    pub sentence_id: u32,
    /// Mean UCA over the included datasets that cover the sentence.
    pub mean: f64,
    pub per_dataset: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremeSentences {
    pub included: Vec<String>,
    pub q1: f64,
    pub q3: f64,
    /// Means strictly above Q3, highest first.
    pub high: Vec<SentenceMean>,
    /// Means strictly below Q1, lowest first.
    pub low: Vec<SentenceMean>,
}

/// Sentences whose cross-dataset mean UCA lies strictly above the third or
/// strictly below the first quartile (type-7) of all sentence means.
pub fn extreme_sentences(
    per_dataset: &BTreeMap<String, BTreeMap<u32, f64>>,
    exclude: &[&str],
) -> Result<ExtremeSentences, AnalysisError> {
    let included: Vec<(&String, &BTreeMap<u32, f64>)> =
        per_dataset.iter().filter(|(label, _)| !exclude.contains(&label.as_str())).collect();
    if included.is_empty() {
        return Err(AnalysisError::NoDatasets);
    }
    let ids: BTreeSet<u32> = included.iter().flat_map(|(_, m)| m.keys().copied()).collect();
    let means: Vec<SentenceMean> = ids
        .into_iter()
        .map(|id| {
            let per: BTreeMap<String, f64> =
                included.iter().filter_map(|(l, m)| m.get(&id).map(|&v| ((*l).clone(), v))).collect();
            let mean = per.values().sum::<f64>() / per.len() as f64;
            SentenceMean { sentence_id: id, mean, per_dataset: per }
        })
        .collect();
    let mut sorted: Vec<f64> = means.iter().map(|m| m.mean).collect();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_type7(&sorted, 0.25)?;
    let q3 = quantile_type7(&sorted, 0.75)?;
    let mut high: Vec<SentenceMean> = means.iter().filter(|m| m.mean > q3).cloned().collect();
    let mut low: Vec<SentenceMean> = means.iter().filter(|m| m.mean < q1).cloned().collect();
    high.sort_by(|a, b| b.mean.total_cmp(&a.mean).then(a.sentence_id.cmp(&b.sentence_id)));
    low.sort_by(|a, b| a.mean.total_cmp(&b.mean).then(a.sentence_id.cmp(&b.sentence_id)));
    Ok(ExtremeSentences { included: included.iter().map(|(l, _)| (*l).clone()).collect(), q1, q3, high, low })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbGroup {
    pub verb: String,
    pub sentence_ids: Vec<u32>,
    /// Mean per-sentence UCA per dataset label.
    pub uca_mean: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerbGroupAnalysis {
    pub min_occurrences: usize,
    pub groups: Vec<VerbGroup>,
    pub anova: BTreeMap<String, Anova>,
    pub tukey: BTreeMap<String, Tukey>,
    /// Per-dataset, per-verb UCA observations (one per sentence).
    pub observations: BTreeMap<String, Vec<Vec<f64>>>,
}

/// Groups sentences by annotated verb (verbs with at least `min_occurrences`
/// sentences) and tests, per dataset, whether mean UCA differs by verb.
pub fn verb_group_analysis(
    datasets: &[&Dataset],
    corpus: &Corpus,
    min_occurrences: usize,
    k: usize,
) -> Result<VerbGroupAnalysis, AnalysisError> {
    if datasets.is_empty() {
        return Err(AnalysisError::NoDatasets);
    }
    // only sentences every dataset covers, so groups line up across datasets
    let covered: BTreeSet<u32> = datasets
        .iter()
        .map(|d| d.sentence_ids.iter().copied().collect::<BTreeSet<u32>>())
        .reduce(|a, b| a.intersection(&b).copied().collect())
        .unwrap_or_default();
    let verbs: BTreeMap<String, Vec<u32>> = corpus
        .verbs_with_min_occurrences(min_occurrences)
        .into_iter()
        .map(|(verb, ids)| (verb, ids.into_iter().filter(|id| covered.contains(id)).collect::<Vec<u32>>()))
        .filter(|(_, ids)| ids.len() >= min_occurrences.max(1))
        .collect();
    if verbs.len() < 2 {
        return Err(AnalysisError::TooFewVerbs { found: verbs.len(), min: min_occurrences });
    }
    let mut groups: Vec<VerbGroup> = verbs
        .iter()
        .map(|(verb, ids)| VerbGroup { verb: verb.clone(), sentence_ids: ids.clone(), uca_mean: BTreeMap::new() })
        .collect();
    let labels: Vec<String> = groups.iter().map(|g| g.verb.clone()).collect();
    let mut anova = BTreeMap::new();
    let mut tukey = BTreeMap::new();
    let mut observations = BTreeMap::new();
    for ds in datasets {
        let scores = uca_values(&uca_by_sentence(ds, k)?);
        if let Some(&stray) = scores.keys().find(|id| corpus.get(**id).is_none()) {
            return Err(AnalysisError::UnknownSentence { label: ds.label.clone(), sentence: stray });
        }
        let obs: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.sentence_ids.iter().filter_map(|id| scores.get(id).copied()).collect())
            .collect();
        for (g, values) in groups.iter_mut().zip(&obs) {
            if !values.is_empty() {
                g.uca_mean.insert(ds.label.clone(), values.iter().sum::<f64>() / values.len() as f64);
            }
        }
        anova.insert(ds.label.clone(), anova_oneway(&obs)?);
        tukey.insert(ds.label.clone(), tukey_hsd(&obs, &labels)?);
        observations.insert(ds.label.clone(), obs);
    }
    Ok(VerbGroupAnalysis { min_occurrences, groups, anova, tukey, observations })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TotalsRow {
    pub category: PronounCategory,
    pub a: u64,
    pub b: u64,
    /// `b − a`
    pub delta: i64,
}

/// Reproducibility comparison of two datasets over the same sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: String,
    pub b: String,
    pub sentence_ids: Vec<u32>,
    pub uca_a: Vec<f64>,
    pub uca_b: Vec<f64>,
    /// Pearson r of per-sentence UCA; `None` when either side is constant.
    pub uca_r: Option<f64>,
    /// Pearson r of per-sentence counts of exactly "she".
    pub she_r: Option<f64>,
    pub totals: Vec<TotalsRow>,
    pub summary_a: Summary,
    pub summary_b: Summary,
}

fn correlation(x: &[f64], y: &[f64]) -> Result<Option<f64>, AnalysisError> {
    match pearson(x, y) {
        Ok(r) => Ok(Some(r)),
        Err(StatsError::ZeroVariance(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

pub fn compare_datasets(a: &Dataset, b: &Dataset, k: usize) -> Result<ComparisonReport, AnalysisError> {
    let ids_a: BTreeSet<u32> = a.sentence_ids.iter().copied().collect();
    let ids_b: BTreeSet<u32> = b.sentence_ids.iter().copied().collect();
    if ids_a != ids_b {
        return Err(AnalysisError::CorpusMismatch { a: a.label.clone(), b: b.label.clone() });
    }
    let sa = uca_values(&uca_by_sentence(a, k)?);
    let sb = uca_values(&uca_by_sentence(b, k)?);
    let sentence_ids: Vec<u32> = ids_a.into_iter().collect();
    let uca_a: Vec<f64> = sentence_ids.iter().map(|id| sa[id]).collect();
    let uca_b: Vec<f64> = sentence_ids.iter().map(|id| sb[id]).collect();
    let (ta, tb) = (a.tallies(), b.tallies());
    let she = |t: &BTreeMap<u32, crate::PronounTally>| -> Vec<f64> {
        sentence_ids.iter().map(|id| t[id].count(&PronounCategory::She) as f64).collect()
    };
    let (pa, pb) = (a.pronoun_totals(), b.pronoun_totals());
    let categories: BTreeSet<&PronounCategory> = pa.keys().chain(pb.keys()).collect();
    let totals = categories
        .into_iter()
        .map(|c| {
            let (x, y) = (pa.get(c).copied().unwrap_or(0), pb.get(c).copied().unwrap_or(0));
            TotalsRow { category: c.clone(), a: x, b: y, delta: y as i64 - x as i64 }
        })
        .collect();
    Ok(ComparisonReport {
        a: a.label.clone(),
        b: b.label.clone(),
        uca_r: correlation(&uca_a, &uca_b)?,
        she_r: correlation(&she(&ta), &she(&tb))?,
        summary_a: summarize(&uca_a)?,
        summary_b: summarize(&uca_b)?,
        sentence_ids,
        uca_a,
        uca_b,
        totals,
    })
}

/// Everything `analyze` produces for a set of datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub k: usize,
    pub counts: CountTable,
    /// Sentence bodies by id, for labelling.
    pub sentences: BTreeMap<u32, String>,
    /// Per-dataset, per-sentence pronoun counts.
    pub pronouns: BTreeMap<String, BTreeMap<u32, BTreeMap<PronounCategory, u64>>>,
    pub uca: BTreeMap<String, BTreeMap<u32, f64>>,
    pub distributions: Vec<UcaDistribution>,
    pub extremes: ExtremeSentences,
    pub verb_groups: Option<VerbGroupAnalysis>,
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub k: usize,
    pub min_verb_occurrences: usize,
    /// Dataset labels left out of the extreme-sentence means.
    pub exclude_from_extremes: Vec<String>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { k: crate::DEFAULT_K, min_verb_occurrences: 2, exclude_from_extremes: Vec::new() }
    }
}

pub fn analyze(datasets: &[&Dataset], corpus: &Corpus, options: &AnalysisOptions) -> Result<AnalysisReport, AnalysisError> {
    let counts = pronoun_count_table(datasets)?;
    let mut uca = BTreeMap::new();
    let mut pronouns = BTreeMap::new();
    let mut distributions = Vec::new();
    for ds in datasets {
        let per: BTreeMap<u32, BTreeMap<PronounCategory, u64>> =
            ds.tallies().into_iter().map(|(id, t)| (id, t.counts().clone())).collect();
        pronouns.insert(ds.label.clone(), per);
        let values = uca_values(&uca_by_sentence(ds, options.k)?);
        distributions.push(uca_distribution(&ds.label, &values)?);
        uca.insert(ds.label.clone(), values);
    }
    let exclude: Vec<&str> = options.exclude_from_extremes.iter().map(String::as_str).collect();
    let extremes = extreme_sentences(&uca, &exclude)?;
    let verb_groups = match verb_group_analysis(datasets, corpus, options.min_verb_occurrences, options.k) {
        Ok(v) => Some(v),
        Err(AnalysisError::TooFewVerbs { found, min }) => {
            log::warn!("skipping verb-group analysis: only {found} verbs with at least {min} sentences");
            None
        }
        Err(e) => return Err(e),
    };
    let sentences = corpus.sentences.iter().map(|s| (s.id, s.body.clone())).collect();
    Ok(AnalysisReport { k: options.k, counts, sentences, pronouns, uca, distributions, extremes, verb_groups })
}

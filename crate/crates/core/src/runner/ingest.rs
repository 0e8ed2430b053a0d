//! Import of previously collected datasets from delimited text files.
//!
//! A TOML mapping names the source column for each trial field:
//!
//! ```toml
//! label = "FI0"
//! pivot = "FI"
//! delimiter = ","
//!
//! [columns]
//! sentence_id = "sentence"   # or sentence_text = "prompt" (needs a corpus)
//! pronoun = "pronoun"        # or back_text = "translation"
//! trial_index = "run"        # optional
//! count = "n"                # optional, for pre-aggregated rows
//!
//! [labels]
//! "he / she" = "he/she"
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::Deserialize;

use super::{Dataset, DatasetMetadata, Provenance, RunError, TrialRecord, TrialStatus};
use crate::clock::Clock;
use crate::corpus::Corpus;
use crate::extract::{extract_pronoun, PronounCategory};
use crate::translate::LanguageCode;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestMapping {
    pub label: String,
    pub pivot: Option<String>,
    /// Single-character field delimiter; `\t` is accepted for tab.
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default = "yes")]
    pub has_header: bool,
    /// Defaults to the largest per-sentence trial count found.
    pub trials_per_sentence: Option<u32>,
    pub columns: ColumnMap,
    /// Source label → canonical label, applied before parsing.
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

fn default_delimiter() -> String {
    ",".into()
}

fn yes() -> bool {
    true
}

/// Column names (or zero-based indices when the file has no header).
#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    pub sentence_id: Option<String>,
    pub sentence_text: Option<String>,
    pub pronoun: Option<String>,
    pub back_text: Option<String>,
    pub forward_text: Option<String>,
    pub trial_index: Option<String>,
    pub count: Option<String>,
}

impl IngestMapping {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mapping: IngestMapping = toml::from_str(text).map_err(|e| RunError::Ingest(format!("mapping: {e}")))?;
        mapping.check()?;
        Ok(mapping)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Ingest(format!("reading mapping {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check(&self) -> Result<(), RunError> {
        let c = &self.columns;
        if c.sentence_id.is_none() && c.sentence_text.is_none() {
            return Err(RunError::Ingest("mapping needs columns.sentence_id or columns.sentence_text".into()));
        }
        if c.pronoun.is_none() && c.back_text.is_none() {
            return Err(RunError::Ingest("mapping needs columns.pronoun or columns.back_text".into()));
        }
        self.delimiter_byte().map(|_| ())
    }

    fn delimiter_byte(&self) -> Result<u8, RunError> {
        match self.delimiter.as_str() {
            "\\t" | "\t" | "tab" => Ok(b'\t'),
            d if d.len() == 1 => Ok(d.as_bytes()[0]),
            d => Err(RunError::Ingest(format!("delimiter must be one character, got '{d}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub rows: usize,
    pub records: usize,
    /// Labels that were not recognised and were kept as OTHER, with counts.
    pub unknown_labels: BTreeMap<String, u64>,
    /// True when pronouns came from re-extracting back-translations.
    pub reextracted: bool,
}

struct Resolved {
    sentence_id: Option<usize>,
    sentence_text: Option<usize>,
    pronoun: Option<usize>,
    back_text: Option<usize>,
    forward_text: Option<usize>,
    trial_index: Option<usize>,
    count: Option<usize>,
}

fn resolve_columns(map: &ColumnMap, header: Option<&csv::StringRecord>) -> Result<Resolved, RunError> {
    let find = |name: &Option<String>, field: &str| -> Result<Option<usize>, RunError> {
        let Some(name) = name else { return Ok(None) };
        let idx = match header {
            Some(h) => h.iter().position(|c| c.trim() == name.trim()),
            None => name.trim().parse().ok(),
        };
        idx.map(Some)
            .ok_or_else(|| RunError::Ingest(format!("column '{name}' mapped to {field} is not in the file")))
    };
    Ok(Resolved {
        sentence_id: find(&map.sentence_id, "sentence_id")?,
        sentence_text: find(&map.sentence_text, "sentence_text")?,
        pronoun: find(&map.pronoun, "pronoun")?,
        back_text: find(&map.back_text, "back_text")?,
        forward_text: find(&map.forward_text, "forward_text")?,
        trial_index: find(&map.trial_index, "trial_index")?,
        count: find(&map.count, "count")?,
    })
}

fn normalize_text(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Reads `path` under `mapping` into an external dataset.
///
/// With a corpus, sentence ids must belong to it and the dataset covers the
/// whole corpus; without one it covers the ids found in the file.
pub fn ingest_external(
    path: &Path,
    mapping: &IngestMapping,
    corpus: Option<&Corpus>,
    clock: &dyn Clock,
) -> Result<(Dataset, IngestReport), RunError> {
    mapping.check()?;
    let file = std::fs::File::open(path).map_err(|e| RunError::Ingest(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter_byte()?)
        .has_headers(mapping.has_header)
        .flexible(true)
        .from_reader(file);
    let header = if mapping.has_header {
        Some(reader.headers().map_err(|e| RunError::Ingest(e.to_string()))?.clone())
    } else {
        None
    };
    let cols = resolve_columns(&mapping.columns, header.as_ref())?;
    if cols.sentence_text.is_some() && cols.sentence_id.is_none() && corpus.is_none() {
        return Err(RunError::Ingest("sentence_text mapping needs a corpus".into()));
    }
    let by_text: HashMap<String, u32> = corpus
        .map(|c| {
            c.sentences
                .iter()
                .flat_map(|s| [(normalize_text(&s.text()), s.id), (normalize_text(&s.body), s.id)])
                .collect()
        })
        .unwrap_or_default();
    let aliases: HashMap<String, &str> =
        mapping.labels.iter().map(|(k, v)| (normalize_text(k), v.as_str())).collect();
    let pivot = mapping.pivot.as_deref().map(LanguageCode::new).transpose().map_err(RunError::Backend)?;
    let created_at = clock.now();
    let run_id = format!("{}-external", mapping.label);

    let mut report = IngestReport { reextracted: cols.pronoun.is_none(), ..Default::default() };
    let mut records = Vec::new();
    let mut next_trial: BTreeMap<u32, u32> = BTreeMap::new();
    let mut seen_pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| RunError::Ingest(format!("row {}: {e}", i + 1)))?;
        report.rows += 1;
        let line = i + 1 + usize::from(mapping.has_header);
        let cell = |idx: Option<usize>| idx.and_then(|j| row.get(j)).map(str::trim);
        let bad = |what: String| RunError::Ingest(format!("line {line}: {what}"));

        let sentence_id = match (cell(cols.sentence_id), cell(cols.sentence_text)) {
            (Some(raw), _) => raw.parse::<u32>().ok().filter(|&v| v > 0).ok_or_else(|| bad(format!("bad sentence id '{raw}'")))?,
            (None, Some(text)) => {
                *by_text.get(&normalize_text(text)).ok_or_else(|| bad(format!("sentence '{text}' is not in the corpus")))?
            }
            (None, None) => return Err(bad("missing sentence column".into())),
        };
        if let Some(c) = corpus {
            if c.get(sentence_id).is_none() {
                return Err(bad(format!("sentence id {sentence_id} is not in the corpus")));
            }
        }
        let back_text = cell(cols.back_text).map(str::to_string);
        let pronoun = match (cell(cols.pronoun), &back_text) {
            (Some(label), _) => {
                let aliased = aliases.get(&normalize_text(label)).copied().unwrap_or(label);
                let (category, known) = PronounCategory::from_label_lenient(aliased);
                if !known {
                    *report.unknown_labels.entry(aliased.trim().to_string()).or_insert(0) += 1;
                }
                category
            }
            (None, Some(text)) => extract_pronoun(text),
            (None, None) => return Err(bad("row has neither pronoun nor back-translation".into())),
        };
        let count = match cell(cols.count) {
            Some(raw) => raw.parse::<u32>().map_err(|_| bad(format!("bad count '{raw}'")))?,
            None => 1,
        };
        let explicit_trial = match cell(cols.trial_index) {
            Some(raw) => Some(raw.parse::<u32>().ok().filter(|&v| v > 0).ok_or_else(|| bad(format!("bad trial index '{raw}'")))?),
            None => None,
        };
        if explicit_trial.is_some() && count != 1 {
            return Err(bad("count and trial_index cannot both be used on one row".into()));
        }
        for _ in 0..count {
            let counter = next_trial.entry(sentence_id).or_insert(0);
            *counter += 1;
            let trial_index = explicit_trial.unwrap_or(*counter);
            if !seen_pairs.insert((sentence_id, trial_index)) {
                return Err(bad(format!("duplicate trial {trial_index} for sentence {sentence_id}")));
            }
            records.push(TrialRecord {
                run_id: run_id.clone(),
                sentence_id,
                trial_index,
                presentation_order: None,
                pivot_language: pivot.clone(),
                forward_text: cell(cols.forward_text).map(str::to_string),
                back_text: back_text.clone(),
                pronoun: Some(pronoun.clone()),
                status: TrialStatus::Ok,
                created_at,
            });
        }
    }
    if records.is_empty() {
        return Err(RunError::EmptyDataset);
    }
    report.records = records.len();
    let unknown: u64 = report.unknown_labels.values().sum();
    if unknown > 0 {
        log::warn!("{unknown} pronoun labels were not recognised and were kept as OTHER: {:?}", report.unknown_labels);
    }

    let sentence_ids = match corpus {
        Some(c) => c.ids(),
        None => next_trial.keys().copied().collect(),
    };
    let observed_max = next_trial.values().copied().max().unwrap_or(0);
    let dataset = Dataset {
        label: mapping.label.clone(),
        run_id,
        pivot_language: pivot,
        trials_per_sentence: mapping.trials_per_sentence.unwrap_or(observed_max),
        sentence_ids,
        metadata: DatasetMetadata {
            provenance: Provenance::External { source: path.display().to_string() },
            seed: None,
            backend: "external".into(),
            english_variant: None,
            corpus: corpus.map(|c| c.name.clone()),
            created_at,
            unknown_labels: unknown,
        },
        records,
    };
    Ok((dataset, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;

    fn clock() -> FixedClock {
        FixedClock("2024-05-05T00:00:00Z".parse().unwrap())
    }

    fn ingest(csv: &str, mapping: &str, corpus: Option<&Corpus>) -> Result<(Dataset, IngestReport), RunError> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        std::fs::write(&path, csv).unwrap();
        ingest_external(&path, &IngestMapping::parse(mapping).unwrap(), corpus, &clock())
    }

    const BASIC: &str = "label = \"FI0\"\npivot = \"FI\"\n[columns]\nsentence_id = \"id\"\npronoun = \"pronoun\"\n";

    #[test]
    fn label_mapping() {
        let (ds, report) = ingest("id,pronoun\n1,he or she\n1,he\n2,He/She\n2,\n", BASIC, None).unwrap();
        let totals = ds.pronoun_totals();
        assert_eq!(totals[&PronounCategory::HeOrShe], 1);
        assert_eq!(totals[&PronounCategory::HeSlashShe], 1);
        assert_eq!(totals[&PronounCategory::None], 1);
        assert_eq!(ds.trials_per_sentence, 2);
        assert!(ds.is_complete());
        assert!(report.unknown_labels.is_empty());
        assert!(matches!(&ds.metadata.provenance, Provenance::External { source } if source.ends_with("data.csv")));
    }

    #[test]
    fn unknown_labels_become_other() {
        let (ds, report) = ingest("id,pronoun\n1,ze\n1,ze\n1,she\n", BASIC, None).unwrap();
        assert_eq!(report.unknown_labels["ze"], 2);
        assert_eq!(ds.metadata.unknown_labels, 2);
        assert_eq!(ds.pronoun_totals()[&PronounCategory::Other("ze".into())], 2);
    }

    #[test]
    fn aliases_and_counts() {
        let mapping = "label = \"X\"\ndelimiter = \"\\t\"\n[columns]\nsentence_id = \"s\"\npronoun = \"p\"\ncount = \"n\"\n[labels]\n\"h/s\" = \"he/she\"\n";
        let (ds, _) = ingest("s\tp\tn\n3\th/s\t4\n3\tshe\t1\n", mapping, None).unwrap();
        assert_eq!(ds.records.len(), 5);
        assert_eq!(ds.pronoun_totals()[&PronounCategory::HeSlashShe], 4);
        assert_eq!(ds.sentence_ids, vec![3]);
        let trials: Vec<u32> = ds.records.iter().map(|r| r.trial_index).collect();
        assert_eq!(trials, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn back_text_is_reextracted_and_text_matched() {
        let corpus = Corpus::parse("1\t\tshe fixes bugs.\tfix\n2\t\tshe reads.\tread\n").unwrap();
        let mapping = "label = \"X\"\n[columns]\nsentence_text = \"src\"\nback_text = \"back\"\n";
        let csv = "src,back\n\"As a software engineer, she fixes bugs.\",\"As a software engineer, he fixes bugs.\"\nshe reads.,\"They read.\"\n";
        let (ds, report) = ingest(csv, mapping, Some(&corpus)).unwrap();
        assert!(report.reextracted);
        assert_eq!(ds.records[0].pronoun, Some(PronounCategory::He));
        assert_eq!(ds.records[1].sentence_id, 2);
        assert_eq!(ds.records[1].pronoun, Some(PronounCategory::They));
    }

    #[test]
    fn errors() {
        assert!(matches!(ingest("id,pronoun\n", BASIC, None), Err(RunError::EmptyDataset)));
        let err = ingest("sid,pronoun\n1,he\n", BASIC, None).unwrap_err();
        assert!(err.to_string().contains("'id'"), "{err}");
        assert!(IngestMapping::parse("label = \"X\"\n[columns]\nsentence_id = \"id\"\n").is_err());
        assert!(IngestMapping::parse("label = \"X\"\n[columns]\npronoun = \"p\"\n").is_err());
        assert!(IngestMapping::parse("label = \"X\"\nfoo = 1\n[columns]\nsentence_id = \"a\"\npronoun = \"b\"\n").is_err());
        let corpus = Corpus::parse("1\t\tshe reads.\tread\n").unwrap();
        assert!(ingest("id,pronoun\n9,he\n", BASIC, Some(&corpus)).is_err());
        assert!(ingest("id,pronoun\n1,he\nx,he\n", BASIC, None).unwrap_err().to_string().contains("line 3"));
        let with_trial = "label = \"X\"\n[columns]\nsentence_id = \"id\"\npronoun = \"p\"\ntrial_index = \"t\"\n";
        assert!(ingest("id,p,t\n1,he,1\n1,she,1\n", with_trial, None).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn headerless_uses_indices() {
        let mapping = "label = \"X\"\nhas_header = false\n[columns]\nsentence_id = \"0\"\npronoun = \"2\"\n";
        let (ds, _) = ingest("5,ignored,she\n5,ignored,you\n", mapping, None).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.records[1].pronoun, Some(PronounCategory::You));
    }
}

//! Prompt corpus: sentences with stable ids and hand-annotated main verbs.
//!
//! File format is tab-separated UTF-8 with columns `id`, `prefix`, `body`,
//! `verb`. Lines starting with `#` are comments; `#@ key: value` comments set
//! corpus-level options (`name`, `source_pronoun`, `prefix`, `verbs`). An empty
//! prefix cell falls back to the corpus prefix.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_PREFIX: &str = "As a software engineer,";
pub const DEFAULT_SOURCE_PRONOUN: &str = "she";

/// The shipped software-engineering task corpus.
pub const DEFAULT_CORPUS_TSV: &str = include_str!("../data/se_tasks.tsv");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: u32 },
    #[error("line {line}: missing verb annotation")]
    MissingVerb { line: usize },
    #[error("line {line}: verb '{verb}' is not in the declared verb set")]
    UndeclaredVerb { line: usize, verb: String },
    #[error("line {line}: body must contain '{pronoun}' exactly once (found {found})")]
    SourcePronoun { line: usize, pronoun: String, found: usize },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("corpus has no sentences")]
    Empty,
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSentence {
    pub id: u32,
    pub prefix: String,
    pub body: String,
    pub verb: String,
}

impl PromptSentence {
    /// Prefix and body joined by a single space.
    pub fn text(&self) -> String {
        if self.prefix.is_empty() {
            self.body.clone()
        } else {
            format!("{} {}", self.prefix, self.body)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub source_pronoun: String,
    pub sentences: Vec<PromptSentence>,
    pub verb_set: BTreeSet<String>,
}

/// Whole-word, case-insensitive occurrences of `word` in `text`.
fn count_word(text: &str, word: &str) -> usize {
    let word = word.to_lowercase();
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.to_lowercase() == word)
        .count()
}

impl Corpus {
    pub fn default_corpus() -> Corpus {
        Corpus::parse(DEFAULT_CORPUS_TSV).expect("shipped corpus is valid")
    }

    pub fn parse(text: &str) -> Result<Corpus, CorpusError> {
        let mut name = String::from("corpus");
        let mut source_pronoun = DEFAULT_SOURCE_PRONOUN.to_string();
        let mut prefix = DEFAULT_PREFIX.to_string();
        let mut declared: Option<BTreeSet<String>> = None;
        let mut rows = Vec::new();
        let mut seen_header = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                continue;
            }
            if let Some(directive) = trimmed.strip_prefix("#@") {
                let (key, value) = directive.split_once(':').ok_or_else(|| CorpusError::Malformed {
                    line,
                    reason: "directive needs 'key: value'".into(),
                })?;
                let value = value.trim();
                match key.trim() {
                    "name" => name = value.to_string(),
                    "source_pronoun" => source_pronoun = value.to_string(),
                    "prefix" => prefix = value.to_string(),
                    "verbs" => {
                        declared = Some(
                            value.split(',').map(|v| v.trim().to_lowercase()).filter(|v| !v.is_empty()).collect(),
                        )
                    }
                    other => {
                        return Err(CorpusError::Malformed { line, reason: format!("unknown directive '{other}'") })
                    }
                }
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            let cells: Vec<&str> = trimmed.split('\t').collect();
            if !seen_header && cells.first().map(|c| c.trim().eq_ignore_ascii_case("id")).unwrap_or(false) {
                seen_header = true;
                continue;
            }
            if cells.len() != 4 {
                return Err(CorpusError::Malformed {
                    line,
                    reason: format!("expected 4 tab-separated columns (id, prefix, body, verb), got {}", cells.len()),
                });
            }
            rows.push((line, cells.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>()));
        }

        let mut ids = HashSet::new();
        let mut sentences = Vec::with_capacity(rows.len());
        for (line, cells) in rows {
            let id: u32 = cells[0]
                .parse()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| CorpusError::Malformed { line, reason: format!("id '{}' is not a positive integer", cells[0]) })?;
            if !ids.insert(id) {
                return Err(CorpusError::DuplicateId { line, id });
            }
            let body = cells[2].clone();
            if body.is_empty() {
                return Err(CorpusError::Malformed { line, reason: "empty body".into() });
            }
            let found = count_word(&body, &source_pronoun);
            if found != 1 {
                return Err(CorpusError::SourcePronoun { line, pronoun: source_pronoun.clone(), found });
            }
            let verb = cells[3].to_lowercase();
            if verb.is_empty() {
                return Err(CorpusError::MissingVerb { line });
            }
            if let Some(set) = &declared {
                if !set.contains(&verb) {
                    return Err(CorpusError::UndeclaredVerb { line, verb });
                }
            }
            let sentence_prefix = if cells[1].is_empty() { prefix.clone() } else { cells[1].clone() };
            sentences.push(PromptSentence { id, prefix: sentence_prefix, body, verb });
        }
        if sentences.is_empty() {
            return Err(CorpusError::Empty);
        }
        let verb_set = declared.unwrap_or_else(|| sentences.iter().map(|s| s.verb.clone()).collect());
        Ok(Corpus { name, source_pronoun, sentences, verb_set })
    }

    pub fn load(path: &Path) -> Result<Corpus, CorpusError> {
        Corpus::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&PromptSentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    pub fn ids(&self) -> Vec<u32> {
        self.sentences.iter().map(|s| s.id).collect()
    }

    /// Verbs annotated on at least `min` sentences, each with its sorted ids.
    pub fn verbs_with_min_occurrences(&self, min: usize) -> BTreeMap<String, Vec<u32>> {
        let mut by_verb: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for s in &self.sentences {
            by_verb.entry(s.verb.clone()).or_default().push(s.id);
        }
        by_verb.retain(|_, ids| ids.len() >= min.max(1));
        for ids in by_verb.values_mut() {
            ids.sort_unstable();
        }
        by_verb
    }
}

/// Loads `path`, or the shipped corpus when no path is given.
pub fn load_corpus(path: Option<&Path>) -> Result<Corpus, CorpusError> {
    match path {
        Some(p) => Corpus::load(p),
        None => Ok(Corpus::default_corpus()),
    }
}

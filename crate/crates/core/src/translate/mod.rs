//! Round-trip translation through pluggable backends.
//!
//! [`live::DeeplClient`] talks to a DeepL-v2-compatible HTTP endpoint;
//! [`recording::RecordingBackend`] records its answers to an append-only file
//! or replays them, keyed by request content and repeat index so that repeated
//! identical requests keep their individual answers.

pub mod live;
pub mod recording;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use live::{DeeplClient, RateLimiter, RetryPolicy};
pub use recording::{RecordKey, RecordingBackend, RecordingStore, ReplayMode};

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("translation quota exhausted (HTTP {0})")]
    QuotaExhausted(u16),
    #[error("service answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed service response: {0}")]
    BadResponse(String),
    #[error("replay miss: no recorded response for {0}")]
    ReplayMiss(RecordKey),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unsupported language code '{0}'")]
    UnsupportedLanguage(String),
    #[error("recording file: {0}")]
    Recording(String),
}

impl TranslateError {
    /// Errors worth retrying with backoff.
    pub fn is_transient(&self) -> bool {
        match self {
            TranslateError::Transport(_) => true,
            TranslateError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    /// Errors that must stop a run instead of failing one trial.
    pub fn is_fatal(&self) -> bool {
        matches!(self, TranslateError::ReplayMiss(_) | TranslateError::Recording(_))
    }
}

/// Short uppercase language tag such as `FI` or `EN-GB`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: &str) -> Result<LanguageCode, TranslateError> {
        let code = code.trim().to_uppercase();
        let mut parts = code.split('-');
        let base_ok = parts.next().map(|b| (2..=3).contains(&b.len()) && b.chars().all(|c| c.is_ascii_uppercase()));
        let rest_ok = parts.all(|p| !p.is_empty() && p.len() <= 4 && p.chars().all(|c| c.is_ascii_alphanumeric()));
        if base_ok == Some(true) && rest_ok {
            Ok(LanguageCode(code))
        } else {
            Err(TranslateError::UnsupportedLanguage(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Tag without regional variant (`EN-GB` → `EN`).
    pub fn base(&self) -> &str {
        self.0.split('-').next().unwrap_or(&self.0)
    }

    pub fn same_language(&self, other: &LanguageCode) -> bool {
        self.base() == other.base()
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Supported language codes with the dataset label each pivot produces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageTable {
    pub entries: Vec<LanguageEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageEntry {
    pub code: String,
    pub name: String,
    /// Default dataset label when used as a pivot.
    pub label: String,
    pub pivot: bool,
}

impl Default for LanguageTable {
    fn default() -> Self {
        let e = |code: &str, name: &str, label: &str, pivot: bool| LanguageEntry {
            code: code.into(),
            name: name.into(),
            label: label.into(),
            pivot,
        };
        LanguageTable {
            entries: vec![
                e("EN", "English", "EN", false),
                e("EN-GB", "English (British)", "EN-GB", false),
                e("EN-US", "English (American)", "EN-US", false),
                e("FI", "Finnish", "FI", true),
                e("ET", "Estonian", "ET", true),
                e("HU", "Hungarian", "HU", true),
                e("TR", "Turkish", "TR", true),
                // "ID" reads as "identifier" in tables
                e("ID", "Indonesian", "INDO", true),
            ],
        }
    }
}

impl LanguageTable {
    pub fn resolve(&self, code: &str) -> Result<LanguageCode, TranslateError> {
        let code = LanguageCode::new(code)?;
        if self.entries.iter().any(|e| e.code == code.as_str()) {
            Ok(code)
        } else {
            Err(TranslateError::UnsupportedLanguage(code.0))
        }
    }

    /// Resolves a pivot by code or by dataset label (`INDO` → `ID`).
    pub fn resolve_pivot(&self, code_or_label: &str) -> Result<LanguageCode, TranslateError> {
        let upper = code_or_label.trim().to_uppercase();
        let entry = self
            .entries
            .iter()
            .find(|e| e.pivot && (e.code == upper || e.label == upper))
            .ok_or_else(|| TranslateError::UnsupportedLanguage(upper.clone()))?;
        LanguageCode::new(&entry.code)
    }

    pub fn label_for(&self, code: &LanguageCode) -> String {
        self.entries
            .iter()
            .find(|e| e.code == code.as_str())
            .map(|e| e.label.clone())
            .unwrap_or_else(|| code.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TranslationRequest {
    pub text: String,
    pub source: LanguageCode,
    pub target: LanguageCode,
}

impl TranslationRequest {
    pub fn new(text: &str, source: LanguageCode, target: LanguageCode) -> Result<Self, TranslateError> {
        if text.trim().is_empty() {
            return Err(TranslateError::InvalidRequest("empty text".into()));
        }
        if source.same_language(&target) {
            return Err(TranslateError::InvalidRequest(format!("source and target are both {}", source.base())));
        }
        Ok(TranslationRequest { text: text.to_string(), source, target })
    }
}

/// A translation backend. Implementations must tolerate concurrent callers.
pub trait Translator: Send + Sync {
    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError>;

    /// Stable description recorded in dataset metadata.
    fn identity(&self) -> String;

    /// Translates `requests` with up to `workers` in flight. Results come back
    /// in request order whatever order they complete in.
    fn translate_batch(&self, requests: &[TranslationRequest], workers: usize) -> Vec<Result<String, TranslateError>> {
        parallel_map(requests, workers, |r| self.translate(r))
    }

    /// Marks a request as already answered (used when resuming a run), so
    /// per-repeat bookkeeping stays aligned. Stateless backends ignore it.
    fn advance(&self, _request: &TranslationRequest) {}
}

/// Applies `f` to each item with at most `workers` threads, keeping order.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len().max(1));
    if workers == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

/// Forward and back translation of one prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrip {
    pub forward: String,
    pub back: String,
}

/// Translates `text` from English into `pivot`, then back into `english`.
pub fn round_trip(
    backend: &dyn Translator,
    text: &str,
    pivot: &LanguageCode,
    english: &LanguageCode,
) -> Result<RoundTrip, TranslateError> {
    if pivot.base() == "EN" {
        return Err(TranslateError::InvalidRequest("pivot language must not be English".into()));
    }
    let source = LanguageCode::new(english.base())?;
    let forward = backend.translate(&TranslationRequest::new(text, source, pivot.clone())?)?;
    let back = backend.translate(&TranslationRequest::new(&forward, pivot.clone(), english.clone())?)?;
    Ok(RoundTrip { forward, back })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    struct Fixed(HashMap<String, String>);

    impl Translator for Fixed {
        fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
            self.0.get(&request.text).cloned().ok_or_else(|| TranslateError::BadResponse("unknown".into()))
        }
        fn identity(&self) -> String {
            "fixed".into()
        }
    }

    fn fi() -> LanguageCode {
        LanguageCode::new("FI").unwrap()
    }

    fn en_gb() -> LanguageCode {
        LanguageCode::new("en-gb").unwrap()
    }

    #[test]
    fn worked_round_trip() {
        let src = "As a software engineer, she performs support tasks.";
        let mid = "Ohjelmistoinsinöörinä hän hoitaa tukitehtäviä.";
        let back = "As a software engineer, he takes care of support tasks.";
        let backend = Fixed(HashMap::from([(src.to_string(), mid.to_string()), (mid.to_string(), back.to_string())]));
        let rt = round_trip(&backend, src, &fi(), &en_gb()).unwrap();
        assert_eq!(rt.forward, mid);
        assert_eq!(rt.back, back);
    }

    #[test]
    fn preconditions() {
        let backend = Fixed(HashMap::new());
        assert!(matches!(round_trip(&backend, "", &fi(), &en_gb()), Err(TranslateError::InvalidRequest(_))));
        assert!(matches!(
            round_trip(&backend, "she reads.", &LanguageCode::new("EN-US").unwrap(), &en_gb()),
            Err(TranslateError::InvalidRequest(_))
        ));
        assert!(TranslationRequest::new("x", en_gb(), LanguageCode::new("EN").unwrap()).is_err());
    }

    #[test]
    fn language_codes() {
        assert_eq!(en_gb().as_str(), "EN-GB");
        assert_eq!(en_gb().base(), "EN");
        assert!(LanguageCode::new("finnish").is_err());
        assert!(LanguageCode::new("F1").is_err());
        let table = LanguageTable::default();
        assert_eq!(table.resolve_pivot("INDO").unwrap().as_str(), "ID");
        assert_eq!(table.resolve_pivot("et").unwrap().as_str(), "ET");
        assert!(table.resolve_pivot("EN").is_err());
        assert!(table.resolve("DE").is_err());
        assert_eq!(table.label_for(&LanguageCode::new("ID").unwrap()), "INDO");
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..50).collect();
        let out = parallel_map(&items, 7, |&x| {
            std::thread::sleep(std::time::Duration::from_micros((50 - x) * 20));
            x * 2
        });
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn transient_classification() {
        assert!(TranslateError::Transport("reset".into()).is_transient());
        assert!(TranslateError::Status { status: 429, body: String::new() }.is_transient());
        assert!(TranslateError::Status { status: 503, body: String::new() }.is_transient());
        assert!(!TranslateError::Auth(403).is_transient());
        assert!(!TranslateError::QuotaExhausted(456).is_transient());
    }
}

//! Record / replay of translation traffic.
//!
//! A recording is a JSON-lines file: one header object, then one object per
//! answered request. Entries are keyed by `(text, source, target, occurrence)`
//! where `occurrence` counts earlier identical requests, so a request repeated
//! a hundred times keeps a hundred separate answers.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{parallel_map, LanguageCode, TranslateError, TranslationRequest, Translator};
use crate::clock::{Clock, SystemClock};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub text: String,
    pub source: LanguageCode,
    pub target: LanguageCode,
    pub occurrence: u32,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {}→{}, occurrence {})", self.text, self.source, self.target, self.occurrence)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordEntry {
    #[serde(flatten)]
    pub key: RecordKey,
    pub response: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordingHeader {
    pub created_at: DateTime<Utc>,
    pub backend: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header(RecordingHeader),
    Entry(RecordEntry),
}

/// In-memory view of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingStore {
    pub header: RecordingHeader,
    entries: Vec<RecordEntry>,
    index: HashMap<RecordKey, usize>,
}

impl RecordingStore {
    pub fn new(header: RecordingHeader) -> Self {
        RecordingStore { header, entries: Vec::new(), index: HashMap::new() }
    }

    pub fn parse(text: &str) -> Result<Self, TranslateError> {
        let mut header = None;
        let mut store: Option<RecordingStore> = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(line)
                .map_err(|e| TranslateError::Recording(format!("line {}: {e}", i + 1)))?;
            match parsed {
                Line::Header(h) if header.is_none() && store.is_none() => {
                    header = Some(h.clone());
                    store = Some(RecordingStore::new(h));
                }
                Line::Header(_) => return Err(TranslateError::Recording(format!("line {}: second header", i + 1))),
                Line::Entry(e) => {
                    let s = store
                        .as_mut()
                        .ok_or_else(|| TranslateError::Recording("entry before header".into()))?;
                    s.insert(e).map_err(|e| TranslateError::Recording(format!("line {}: {e}", i + 1)))?;
                }
            }
        }
        store.ok_or_else(|| TranslateError::Recording("missing header".into()))
    }

    pub fn load(path: &Path) -> Result<Self, TranslateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TranslateError::Recording(format!("{}: {e}", path.display())))?;
        RecordingStore::parse(&text)
    }

    pub fn insert(&mut self, entry: RecordEntry) -> Result<(), TranslateError> {
        if self.index.contains_key(&entry.key) {
            return Err(TranslateError::Recording(format!("duplicate key {}", entry.key)));
        }
        self.index.insert(entry.key.clone(), self.entries.len());
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, key: &RecordKey) -> Option<&RecordEntry> {
        self.index.get(key).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[RecordEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Line::Header(self.header.clone())).unwrap();
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(&Line::Entry(e.clone())).unwrap());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMode {
    /// Every request goes to the live backend and is appended to a new recording.
    Record,
    /// Answers only from the recording; a miss is an error.
    Strict,
    /// Answers from the recording; misses go to the live backend and are appended.
    Hybrid,
}

type BaseKey = (String, LanguageCode, LanguageCode);

struct State {
    store: RecordingStore,
    counters: HashMap<BaseKey, u32>,
    file: Option<File>,
}

/// Backend that records to or replays from a [`RecordingStore`].
pub struct RecordingBackend {
    mode: ReplayMode,
    live: Option<Box<dyn Translator>>,
    state: Mutex<State>,
    clock: Arc<dyn Clock>,
    path: Option<PathBuf>,
}

fn base_key(r: &TranslationRequest) -> BaseKey {
    (r.text.clone(), r.source.clone(), r.target.clone())
}

impl RecordingBackend {
    /// Replays from an in-memory store without touching any file.
    pub fn replay(store: RecordingStore) -> Self {
        RecordingBackend {
            mode: ReplayMode::Strict,
            live: None,
            state: Mutex::new(State { store, counters: HashMap::new(), file: None }),
            clock: Arc::new(SystemClock),
            path: None,
        }
    }

    /// Opens `path` in `mode`. Record mode creates a fresh file (refusing to
    /// extend a non-empty one); strict replay requires an existing file;
    /// hybrid opens or creates.
    pub fn open(
        path: &Path,
        mode: ReplayMode,
        live: Option<Box<dyn Translator>>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, TranslateError> {
        let io = |e: std::io::Error| TranslateError::Recording(format!("{}: {e}", path.display()));
        let exists = path.exists() && std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
        if mode != ReplayMode::Strict && live.is_none() {
            return Err(TranslateError::InvalidRequest("recording needs a live backend".into()));
        }
        let store = match (mode, exists) {
            (ReplayMode::Record, true) => {
                return Err(TranslateError::Recording(format!(
                    "{} already holds a recording; extend it with hybrid replay instead",
                    path.display()
                )))
            }
            (ReplayMode::Strict, false) => {
                return Err(TranslateError::Recording(format!("{} does not exist", path.display())))
            }
            (_, true) => RecordingStore::load(path)?,
            (_, false) => {
                let identity = live.as_ref().map(|l| l.identity()).unwrap_or_default();
                RecordingStore::new(RecordingHeader { created_at: clock.now(), backend: identity })
            }
        };
        let file = if mode == ReplayMode::Strict {
            None
        } else {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(io)?;
            }
            let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
            if !exists {
                let line = serde_json::to_string(&Line::Header(store.header.clone())).unwrap();
                writeln!(f, "{line}").map_err(io)?;
                f.flush().map_err(io)?;
            }
            Some(f)
        };
        Ok(RecordingBackend {
            mode,
            live,
            state: Mutex::new(State { store, counters: HashMap::new(), file }),
            clock,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn mode(&self) -> ReplayMode {
        self.mode
    }

    /// Header of the underlying recording.
    pub fn header(&self) -> RecordingHeader {
        self.state.lock().unwrap().store.header.clone()
    }

    /// Snapshot of everything recorded or loaded so far.
    pub fn store(&self) -> RecordingStore {
        self.state.lock().unwrap().store.clone()
    }

    fn reserve(&self, request: &TranslationRequest) -> RecordKey {
        let mut state = self.state.lock().unwrap();
        let counter = state.counters.entry(base_key(request)).or_insert(0);
        let occurrence = *counter;
        *counter += 1;
        RecordKey { text: request.text.clone(), source: request.source.clone(), target: request.target.clone(), occurrence }
    }

    fn resolve(&self, request: &TranslationRequest, key: RecordKey) -> Result<String, TranslateError> {
        if self.mode != ReplayMode::Record {
            if let Some(hit) = self.state.lock().unwrap().store.get(&key) {
                return Ok(hit.response.clone());
            }
        }
        let live = match (&self.live, self.mode) {
            (Some(live), ReplayMode::Record | ReplayMode::Hybrid) => live,
            _ => return Err(TranslateError::ReplayMiss(key)),
        };
        let response = live.translate(request)?;
        let entry = RecordEntry { key, response: response.clone(), timestamp: self.clock.now() };
        let mut state = self.state.lock().unwrap();
        let line = serde_json::to_string(&Line::Entry(entry.clone())).unwrap();
        if let Some(f) = state.file.as_mut() {
            let path = self.path.as_deref().unwrap_or(Path::new("recording"));
            writeln!(f, "{line}")
                .and_then(|_| f.flush())
                .map_err(|e| TranslateError::Recording(format!("{}: {e}", path.display())))?;
        }
        state.store.insert(entry)?;
        Ok(response)
    }
}

impl Translator for RecordingBackend {
    fn translate(&self, request: &TranslationRequest) -> Result<String, TranslateError> {
        let key = self.reserve(request);
        self.resolve(request, key)
    }

    fn identity(&self) -> String {
        let recorded = self.header().backend;
        match self.mode {
            ReplayMode::Record => format!("record[{recorded}]"),
            ReplayMode::Strict => format!("replay[{recorded}]"),
            ReplayMode::Hybrid => format!("hybrid-replay[{recorded}]"),
        }
    }

    fn translate_batch(&self, requests: &[TranslationRequest], workers: usize) -> Vec<Result<String, TranslateError>> {
        // occurrence indices follow request order, not completion order
        let keyed: Vec<(RecordKey, &TranslationRequest)> = requests.iter().map(|r| (self.reserve(r), r)).collect();
        parallel_map(&keyed, workers, |(key, r)| self.resolve(r, key.clone()))
    }

    fn advance(&self, request: &TranslationRequest) {
        self.reserve(request);
    }
}

/// Reads a recording from a reader (used by tests and tooling).
pub fn read_recording<R: std::io::Read>(reader: R) -> Result<RecordingStore, TranslateError> {
    let mut text = String::new();
    for line in BufReader::new(reader).lines() {
        text.push_str(&line.map_err(|e| TranslateError::Recording(e.to_string()))?);
        text.push('\n');
    }
    RecordingStore::parse(&text)
}

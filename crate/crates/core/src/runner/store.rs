//! JSON-lines dataset files: one header line, then one line per trial.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, RunError, TrialRecord};

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Header(Dataset),
    Trial(TrialRecord),
}

fn store_err(path: &Path, reason: impl ToString) -> RunError {
    RunError::Store { path: path.display().to_string(), reason: reason.to_string() }
}

fn encode(line: &Line) -> String {
    let mut s = serde_json::to_string(line).expect("dataset lines serialize");
    s.push('\n');
    s
}

/// Writes `dataset` (header and records) to `path`, replacing it atomically.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), RunError> {
    let mut text = encode(&Line::Header(Dataset { records: Vec::new(), ..dataset.clone() }));
    for r in &dataset.records {
        text.push_str(&encode(&Line::Trial(r.clone())));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| store_err(path, e))?;
    }
    let tmp = path.with_extension("jsonl.tmp");
    std::fs::write(&tmp, text).map_err(|e| store_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| store_err(path, e))
}

/// Reads a dataset file. A torn final line (no trailing newline) left by an
/// interrupted write is ignored.
pub fn read_dataset(path: &Path) -> Result<Dataset, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| store_err(path, e))?;
    parse_dataset(&text).map_err(|reason| store_err(path, reason))
}

pub(crate) fn parse_dataset(text: &str) -> Result<Dataset, String> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    if complete.len() < text.len() {
        log::warn!("ignoring incomplete final line");
    }
    let mut dataset: Option<Dataset> = None;
    for (i, raw) in complete.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(raw).map_err(|e| format!("line {}: {e}", i + 1))?;
        match (line, dataset.as_mut()) {
            (Line::Header(h), None) => dataset = Some(h),
            (Line::Header(_), Some(_)) => return Err(format!("line {}: second header", i + 1)),
            (Line::Trial(_), None) => return Err(format!("line {}: trial before header", i + 1)),
            (Line::Trial(t), Some(d)) => d.records.push(t),
        }
    }
    dataset.ok_or_else(|| "no header line".to_string())
}

/// Appends trial lines to an existing dataset file, syncing after each batch.
pub struct DatasetAppender {
    file: File,
}

impl DatasetAppender {
    pub fn open(path: &Path) -> Result<Self, RunError> {
        let mut file = OpenOptions::new().read(true).write(true).open(path).map_err(|e| store_err(path, e))?;
        // drop a torn final line so new lines start cleanly
        let mut text = Vec::new();
        file.read_to_end(&mut text).map_err(|e| store_err(path, e))?;
        let keep = text.iter().rposition(|&b| b == b'\n').map(|i| i + 1).unwrap_or(0);
        if keep < text.len() {
            file.set_len(keep as u64).map_err(|e| store_err(path, e))?;
        }
        file.seek(SeekFrom::Start(keep as u64)).map_err(|e| store_err(path, e))?;
        Ok(DatasetAppender { file })
    }

    pub fn append(&mut self, records: &[TrialRecord]) -> Result<(), RunError> {
        let text: String = records.iter().map(|r| encode(&Line::Trial(r.clone()))).collect();
        let io = |e: std::io::Error| RunError::Store { path: "<dataset>".into(), reason: e.to_string() };
        self.file.write_all(text.as_bytes()).map_err(io)?;
        self.file.sync_data().map_err(io)
    }
}

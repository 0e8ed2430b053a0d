//! Rendering of analyses to comma-separated tables, JSON-lines records and
//! SVG figures.

mod figures;
mod tables;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::analysis::{AnalysisReport, ComparisonReport};

pub use figures::{category_color, render_figures, PALETTE};
pub use tables::{fmt_fixed, render_tables};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("select at least one output format")]
    NoFormats,
    #[error("unknown format '{0}' (expected csv, jsonl or svg)")]
    UnknownFormat(String),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    /// Comma-separated table with a header row.
    Csv,
    /// One JSON object per line.
    Jsonl,
    /// Self-contained SVG figure.
    Svg,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            "svg" => Ok(Format::Svg),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
            Format::Svg => "svg",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub out_dir: PathBuf,
    pub formats: BTreeSet<Format>,
    pub width: u32,
    pub height: u32,
    /// Restrict output to these dataset labels; all when `None`.
    pub labels: Option<Vec<String>>,
    /// Embedded in figures as a comment when set.
    pub timestamp: Option<DateTime<Utc>>,
}

impl RenderSpec {
    pub fn new(out_dir: &Path, formats: impl IntoIterator<Item = Format>) -> Result<Self, ReportError> {
        let formats: BTreeSet<Format> = formats.into_iter().collect();
        if formats.is_empty() {
            return Err(ReportError::NoFormats);
        }
        Ok(RenderSpec { out_dir: out_dir.to_path_buf(), formats, width: 960, height: 480, labels: None, timestamp: None })
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    fn includes(&self, label: &str) -> bool {
        self.labels.as_ref().map(|ls| ls.iter().any(|l| l == label)).unwrap_or(true)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, ReportError> {
        let path = self.out_dir.join(name);
        std::fs::create_dir_all(&self.out_dir).map_err(|source| ReportError::Io { path: self.out_dir.clone(), source })?;
        std::fs::write(&path, contents).map_err(|source| ReportError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

/// Inputs to the renderers; either part may be absent.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReportInputs<'a> {
    pub analysis: Option<&'a AnalysisReport>,
    pub comparisons: &'a [ComparisonReport],
}

/// Renders every table and figure `spec` asks for; returns written paths.
pub fn render_all(inputs: ReportInputs<'_>, spec: &RenderSpec) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = render_tables(inputs, spec)?;
    written.extend(render_figures(inputs, spec)?);
    if written.is_empty() {
        log::info!("nothing to render");
    }
    Ok(written)
}

/// File-name-safe form of a dataset label.
fn slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

use std::path::PathBuf;

use serde_json::{json, Value};

use super::{slug, Format, RenderSpec, ReportError, ReportInputs};
use crate::analysis::{AnalysisReport, ComparisonReport};
use crate::Summary;

/// Fixed-point rendering; `-0.000` prints as `0.000`, non-finite values as
/// `inf`, `-inf` or `nan`.
pub fn fmt_fixed(value: f64, decimals: usize) -> String {
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

const UCA_DP: usize = 3;
const P_DP: usize = 4;
const F_DP: usize = 3;
/// The reproducibility summary is printed one digit finer than other UCA tables.
const COMPARISON_DP: usize = 4;

struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    records: Vec<Value>,
}

impl Table {
    fn new(name: &str, header: Vec<String>) -> Self {
        Table { name: name.to_string(), header, rows: Vec::new(), records: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>, record: Value) {
        self.rows.push(row);
        self.records.push(record);
    }

    fn csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    fn jsonl(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }
}

fn summary_cells(s: &Summary, dp: usize) -> Vec<String> {
    [s.min, s.q1, s.median, s.mean, s.q3, s.max, s.sd].iter().map(|&v| fmt_fixed(v, dp)).collect()
}

fn summary_record(label: &str, s: &Summary) -> Value {
    json!({
        "dataset": label, "n": s.n, "min": s.min, "q1": s.q1, "median": s.median,
        "mean": s.mean, "q3": s.q3, "max": s.max, "sd": s.sd, "degenerate": s.degenerate,
    })
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn analysis_tables(a: &AnalysisReport, spec: &RenderSpec) -> Vec<Table> {
    let mut out = Vec::new();
    let cols: Vec<usize> = (0..a.counts.labels.len()).filter(|&i| spec.includes(&a.counts.labels[i])).collect();
    let labels: Vec<&String> = cols.iter().map(|&i| &a.counts.labels[i]).collect();
    if labels.is_empty() {
        return out;
    }

    let mut header = strings(&["pronoun"]);
    header.extend(labels.iter().map(|l| l.to_string()));
    let mut t = Table::new("pronoun_counts", header);
    for row in &a.counts.rows {
        let counts: Vec<u64> = cols.iter().map(|&i| row.counts[i]).collect();
        if counts.iter().all(|&c| c == 0) {
            continue;
        }
        let mut cells = vec![row.category.label().to_string()];
        cells.extend(counts.iter().map(u64::to_string));
        let record: serde_json::Map<String, Value> =
            labels.iter().zip(&counts).map(|(l, c)| (l.to_string(), json!(c))).collect();
        t.push(cells, json!({ "pronoun": row.category.label(), "counts": record }));
    }
    out.push(t);

    let mut header = strings(&["sentence_id", "sentence"]);
    header.extend(labels.iter().map(|l| l.to_string()));
    let mut t = Table::new("uca_by_sentence", header);
    for (&id, body) in &a.sentences {
        let values: Vec<Option<f64>> = labels.iter().map(|l| a.uca.get(*l).and_then(|m| m.get(&id)).copied()).collect();
        if values.iter().all(Option::is_none) {
            continue;
        }
        let mut cells = vec![id.to_string(), body.clone()];
        cells.extend(values.iter().map(|v| v.map(|x| fmt_fixed(x, UCA_DP)).unwrap_or_default()));
        let record: serde_json::Map<String, Value> =
            labels.iter().zip(&values).map(|(l, v)| (l.to_string(), json!(v))).collect();
        t.push(cells, json!({ "sentence_id": id, "sentence": body, "uca": record }));
    }
    out.push(t);

    let mut t = Table::new("uca_distribution", strings(&["dataset", "min", "q1", "median", "mean", "q3", "max", "sd"]));
    for d in a.distributions.iter().filter(|d| spec.includes(&d.label)) {
        let mut cells = vec![d.label.clone()];
        cells.extend(summary_cells(&d.summary, UCA_DP));
        t.push(cells, summary_record(&d.label, &d.summary));
    }
    out.push(t);

    let e = &a.extremes;
    let mut header = strings(&["group", "sentence_id", "sentence", "mean"]);
    header.extend(e.included.iter().cloned());
    let mut t = Table::new("extreme_sentences", header);
    for (group, list) in [("high", &e.high), ("low", &e.low)] {
        for s in list {
            let body = a.sentences.get(&s.sentence_id).cloned().unwrap_or_default();
            let mut cells = vec![group.to_string(), s.sentence_id.to_string(), body.clone(), fmt_fixed(s.mean, UCA_DP)];
            cells.extend(e.included.iter().map(|l| s.per_dataset.get(l).map(|&v| fmt_fixed(v, UCA_DP)).unwrap_or_default()));
            t.push(
                cells,
                json!({ "group": group, "sentence_id": s.sentence_id, "sentence": body, "mean": s.mean,
                        "uca": s.per_dataset, "q1": e.q1, "q3": e.q3 }),
            );
        }
    }
    out.push(t);

    if let Some(v) = &a.verb_groups {
        let mut header = strings(&["verb", "sentences"]);
        header.extend(labels.iter().map(|l| l.to_string()));
        let mut t = Table::new("verb_groups", header);
        for g in &v.groups {
            let mut cells = vec![g.verb.clone(), g.sentence_ids.len().to_string()];
            cells.extend(labels.iter().map(|l| g.uca_mean.get(*l).map(|&m| fmt_fixed(m, UCA_DP)).unwrap_or_default()));
            t.push(cells, json!({ "verb": g.verb, "sentence_ids": g.sentence_ids, "uca_mean": g.uca_mean }));
        }
        out.push(t);

        let mut t = Table::new("anova", strings(&["dataset", "f", "p", "df_between", "df_within", "degenerate"]));
        for (label, r) in v.anova.iter().filter(|(l, _)| spec.includes(l)) {
            t.push(
                vec![
                    label.clone(),
                    fmt_fixed(r.f_value, F_DP),
                    fmt_fixed(r.p_value, P_DP),
                    r.df_between.to_string(),
                    r.df_within.to_string(),
                    r.degenerate.to_string(),
                ],
                json!({ "dataset": label, "f": r.f_value, "p": r.p_value, "df_between": r.df_between,
                        "df_within": r.df_within, "ms_between": r.ms_between, "ms_within": r.ms_within,
                        "degenerate": r.degenerate }),
            );
        }
        out.push(t);

        let mut t =
            Table::new("tukey", strings(&["dataset", "a", "b", "mean_difference", "q", "p", "significant"]));
        for (label, r) in v.tukey.iter().filter(|(l, _)| spec.includes(l)) {
            for c in &r.comparisons {
                t.push(
                    vec![
                        label.clone(),
                        c.a.clone(),
                        c.b.clone(),
                        fmt_fixed(c.mean_difference, UCA_DP),
                        fmt_fixed(c.q_statistic, F_DP),
                        fmt_fixed(c.p_value, P_DP),
                        c.significant_at_95.to_string(),
                    ],
                    json!({ "dataset": label, "a": c.a, "b": c.b, "mean_difference": c.mean_difference,
                            "q": c.q_statistic, "p": c.p_value, "significant": c.significant_at_95 }),
                );
            }
        }
        out.push(t);
    }
    out
}

fn comparison_tables(c: &ComparisonReport) -> Vec<Table> {
    let stem = format!("comparison_{}_{}", slug(&c.a), slug(&c.b));
    let mut totals = Table::new(&format!("{stem}_totals"), vec!["pronoun".into(), c.a.clone(), c.b.clone(), "delta".into()]);
    for row in &c.totals {
        totals.push(
            vec![row.category.label().to_string(), row.a.to_string(), row.b.to_string(), row.delta.to_string()],
            json!({ "pronoun": row.category.label(), "a": row.a, "b": row.b, "delta": row.delta }),
        );
    }
    let mut summary =
        Table::new(&format!("{stem}_summary"), strings(&["dataset", "min", "q1", "median", "mean", "q3", "max", "sd"]));
    for (label, s) in [(&c.a, &c.summary_a), (&c.b, &c.summary_b)] {
        let mut cells = vec![label.clone()];
        cells.extend(summary_cells(s, COMPARISON_DP));
        summary.push(cells, summary_record(label, s));
    }
    let mut corr = Table::new(&format!("{stem}_correlation"), strings(&["measure", "r"]));
    for (measure, r) in [("uca", c.uca_r), ("she_count", c.she_r)] {
        corr.push(
            vec![measure.to_string(), r.map(|v| fmt_fixed(v, UCA_DP)).unwrap_or_else(|| "undefined".into())],
            json!({ "measure": measure, "a": c.a, "b": c.b, "r": r, "sentences": c.sentence_ids.len() }),
        );
    }
    let mut per_sentence = Table::new(&format!("{stem}_uca"), vec!["sentence_id".into(), c.a.clone(), c.b.clone()]);
    for ((id, x), y) in c.sentence_ids.iter().zip(&c.uca_a).zip(&c.uca_b) {
        per_sentence.push(
            vec![id.to_string(), fmt_fixed(*x, UCA_DP), fmt_fixed(*y, UCA_DP)],
            json!({ "sentence_id": id, "a": x, "b": y }),
        );
    }
    vec![totals, summary, corr, per_sentence]
}

/// Writes one file per table and selected tabular format.
pub fn render_tables(inputs: ReportInputs<'_>, spec: &RenderSpec) -> Result<Vec<PathBuf>, ReportError> {
    let mut tables = Vec::new();
    if let Some(a) = inputs.analysis {
        tables.extend(analysis_tables(a, spec));
    }
    for c in inputs.comparisons.iter().filter(|c| spec.includes(&c.a) || spec.includes(&c.b)) {
        tables.extend(comparison_tables(c));
    }
    let mut written = Vec::new();
    for t in &tables {
        if spec.wants(Format::Csv) {
            written.push(spec.write(&format!("{}.csv", t.name), &t.csv())?);
        }
        if spec.wants(Format::Jsonl) {
            written.push(spec.write(&format!("{}.jsonl", t.name), &t.jsonl())?);
        }
    }
    Ok(written)
}

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use super::{slug, Format, RenderSpec, ReportError, ReportInputs};
use crate::analysis::ComparisonReport;
use crate::extract::PronounCategory;
use crate::stats::quantile_type7;

/// Fill colour for each fixed category, in table order.
pub const PALETTE: [(&str, &str); 10] = [
    ("(none)", "#9e9e9e"),
    ("he", "#1f77b4"),
    ("he or she", "#9467bd"),
    ("he/she", "#17becf"),
    ("it", "#8c564b"),
    ("one", "#bcbd22"),
    ("she", "#d62728"),
    ("she or he", "#e377c2"),
    ("they", "#2ca02c"),
    ("you", "#ff7f0e"),
];

const OTHER_COLOR: &str = "#000000";
const MARGIN: f64 = 50.0;

pub fn category_color(category: &PronounCategory) -> &'static str {
    PALETTE.iter().find(|(label, _)| *label == category.label()).map(|(_, c)| *c).unwrap_or(OTHER_COLOR)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(spec: &RenderSpec, title: &str) -> Self {
        let (width, height) = (spec.width.max(200) as f64, spec.height.max(150) as f64);
        let mut body = String::new();
        writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">"
        )
        .unwrap();
        if let Some(ts) = spec.timestamp {
            writeln!(body, "<!-- generated {} -->", ts.to_rfc3339()).unwrap();
        }
        writeln!(body, "<title>{}</title>", esc(title)).unwrap();
        writeln!(body, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>").unwrap();
        writeln!(body, "<text x=\"{:.2}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>", width / 2.0, esc(title))
            .unwrap();
        Svg { body, width, height }
    }

    fn plot_left(&self) -> f64 {
        MARGIN
    }

    fn plot_right(&self) -> f64 {
        self.width - MARGIN * 2.0
    }

    fn plot_top(&self) -> f64 {
        MARGIN
    }

    fn plot_bottom(&self) -> f64 {
        self.height - MARGIN
    }

    fn y_for(&self, v: f64, max: f64) -> f64 {
        self.plot_bottom() - (v / max) * (self.plot_bottom() - self.plot_top())
    }

    fn y_axis(&mut self, max: f64, label: &str) {
        let (l, b, t) = (self.plot_left(), self.plot_bottom(), self.plot_top());
        writeln!(self.body, "<line class=\"axis\" x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{l:.2}\" y2=\"{t:.2}\" stroke=\"black\"/>").unwrap();
        writeln!(
            self.body,
            "<line class=\"axis\" x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>",
            self.plot_right()
        )
        .unwrap();
        for i in 0..=4 {
            let v = max * i as f64 / 4.0;
            let y = self.y_for(v, max);
            writeln!(self.body, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>", l - 4.0, y + 4.0).unwrap();
        }
        writeln!(
            self.body,
            "<text x=\"14\" y=\"{:.2}\" transform=\"rotate(-90 14 {:.2})\" text-anchor=\"middle\">{}</text>",
            (t + b) / 2.0,
            (t + b) / 2.0,
            esc(label)
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// One bar per sentence, segmented by pronoun share.
fn pronoun_distribution(label: &str, per_sentence: &BTreeMap<u32, BTreeMap<PronounCategory, u64>>, spec: &RenderSpec) -> String {
    let mut svg = Svg::new(spec, &format!("Pronoun distribution across sentences, {label}"));
    svg.y_axis(1.0, "share of trials");
    let slots = per_sentence.len().max(1) as f64;
    let slot = (svg.plot_right() - svg.plot_left()) / slots;
    let bar = slot * 0.8;
    let span = svg.plot_bottom() - svg.plot_top();
    for (i, (id, counts)) in per_sentence.iter().enumerate() {
        let n: u64 = counts.values().sum();
        let x = svg.plot_left() + slot * i as f64 + (slot - bar) / 2.0;
        let mut y = svg.plot_bottom();
        for (cat, &count) in counts.iter().filter(|(_, &c)| c > 0) {
            let h = span * count as f64 / n as f64;
            y -= h;
            writeln!(
                svg.body,
                "<rect class=\"segment\" data-sentence=\"{id}\" data-category=\"{}\" data-count=\"{count}\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar:.2}\" height=\"{h:.2}\" fill=\"{}\"/>",
                esc(cat.label()),
                category_color(cat)
            )
            .unwrap();
        }
        if per_sentence.len() <= 80 {
            writeln!(
                svg.body,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"8\">{id}</text>",
                x + bar / 2.0,
                svg.plot_bottom() + 12.0
            )
            .unwrap();
        }
    }
    let mut present: Vec<&PronounCategory> = per_sentence.values().flat_map(|c| c.iter().filter(|(_, &n)| n > 0).map(|(k, _)| k)).collect();
    present.sort();
    present.dedup();
    let lx = svg.plot_right() + 10.0;
    for (i, cat) in present.iter().enumerate() {
        let ly = svg.plot_top() + 16.0 * i as f64;
        writeln!(
            svg.body,
            "<rect class=\"legend\" data-category=\"{0}\" x=\"{lx:.2}\" y=\"{ly:.2}\" width=\"10\" height=\"10\" fill=\"{1}\"/><text x=\"{2:.2}\" y=\"{3:.2}\">{0}</text>",
            esc(cat.label()),
            category_color(cat),
            lx + 14.0,
            ly + 9.0
        )
        .unwrap();
    }
    svg.finish()
}

/// Tukey box: quartiles, whiskers to the furthest points within 1.5 IQR,
/// remaining points as outliers.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub low_whisker: f64,
    pub high_whisker: f64,
    pub outliers: Vec<f64>,
}

pub(crate) fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_type7(&v, 0.25).ok()?;
    let median = quantile_type7(&v, 0.5).ok()?;
    let q3 = quantile_type7(&v, 0.75).ok()?;
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|&x| x >= lo_fence && x <= hi_fence).collect();
    Some(BoxStats {
        q1,
        median,
        q3,
        low_whisker: inside.first().copied().unwrap_or(q1),
        high_whisker: inside.last().copied().unwrap_or(q3),
        outliers: v.into_iter().filter(|&x| x < lo_fence || x > hi_fence).collect(),
    })
}

fn verb_boxes(label: &str, verbs: &[&str], observations: &[Vec<f64>], spec: &RenderSpec) -> String {
    let mut svg = Svg::new(spec, &format!("UCA per verb, {label}"));
    let max = observations.iter().flatten().copied().fold(1.0f64, f64::max);
    svg.y_axis(max, "UCA");
    let slot = (svg.plot_right() - svg.plot_left()) / verbs.len().max(1) as f64;
    let w = slot * 0.5;
    for (i, (verb, obs)) in verbs.iter().zip(observations).enumerate() {
        let Some(b) = box_stats(obs) else { continue };
        let cx = svg.plot_left() + slot * (i as f64 + 0.5);
        let y = |v: f64| svg.y_for(v, max);
        let mut g = String::new();
        writeln!(g, "<g class=\"box\" data-verb=\"{}\" data-n=\"{}\">", esc(verb), obs.len()).unwrap();
        writeln!(g, "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y(b.low_whisker), y(b.q1)).unwrap();
        writeln!(g, "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y(b.q3), y(b.high_whisker)).unwrap();
        writeln!(
            g,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{:.2}\" fill=\"#c6dbef\" stroke=\"black\"/>",
            cx - w / 2.0,
            y(b.q3),
            y(b.q1) - y(b.q3)
        )
        .unwrap();
        writeln!(
            g,
            "<line class=\"median\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"2\"/>",
            cx - w / 2.0,
            y(b.median),
            cx + w / 2.0,
            y(b.median)
        )
        .unwrap();
        for o in &b.outliers {
            writeln!(g, "<circle class=\"outlier\" cx=\"{cx:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"none\" stroke=\"black\"/>", y(*o)).unwrap();
        }
        writeln!(
            g,
            "<text x=\"{cx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            svg.plot_bottom() + 14.0,
            esc(verb)
        )
        .unwrap();
        g.push_str("</g>\n");
        svg.body.push_str(&g);
    }
    svg.finish()
}

fn scatter(c: &ComparisonReport, spec: &RenderSpec) -> String {
    let mut svg = Svg::new(spec, &format!("UCA per sentence, {} versus {}", c.a, c.b));
    let max = c.uca_a.iter().chain(&c.uca_b).copied().fold(1.0f64, f64::max);
    svg.y_axis(max, &c.b);
    let (l, r) = (svg.plot_left(), svg.plot_right());
    let x_for = |v: f64| l + (v / max) * (r - l);
    writeln!(
        svg.body,
        "<line class=\"identity\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>",
        x_for(0.0),
        svg.y_for(0.0, max),
        x_for(max),
        svg.y_for(max, max)
    )
    .unwrap();
    for ((id, a), b) in c.sentence_ids.iter().zip(&c.uca_a).zip(&c.uca_b) {
        writeln!(
            svg.body,
            "<circle class=\"point\" data-sentence=\"{id}\" data-x=\"{a}\" data-y=\"{b}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>",
            x_for(*a),
            svg.y_for(*b, max)
        )
        .unwrap();
    }
    writeln!(
        svg.body,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (l + r) / 2.0,
        svg.height - 12.0,
        esc(&c.a)
    )
    .unwrap();
    svg.finish()
}

/// Writes the stacked-bar, verb box-plot and scatter figures as SVG.
pub fn render_figures(inputs: ReportInputs<'_>, spec: &RenderSpec) -> Result<Vec<PathBuf>, ReportError> {
    if !spec.wants(Format::Svg) {
        return Ok(Vec::new());
    }
    let mut written = Vec::new();
    if let Some(a) = inputs.analysis {
        for (label, per_sentence) in a.pronouns.iter().filter(|(l, _)| spec.includes(l)) {
            let svg = pronoun_distribution(label, per_sentence, spec);
            written.push(spec.write(&format!("pronoun_distribution_{}.svg", slug(label)), &svg)?);
        }
        if let Some(v) = &a.verb_groups {
            let verbs: Vec<&str> = v.groups.iter().map(|g| g.verb.as_str()).collect();
            for (label, obs) in v.observations.iter().filter(|(l, _)| spec.includes(l)) {
                let svg = verb_boxes(label, &verbs, obs, spec);
                written.push(spec.write(&format!("uca_by_verb_{}.svg", slug(label)), &svg)?);
            }
        }
    }
    for c in inputs.comparisons.iter().filter(|c| spec.includes(&c.a) || spec.includes(&c.b)) {
        written.push(spec.write(&format!("uca_scatter_{}_{}.svg", slug(&c.a), slug(&c.b)), &scatter(c, spec))?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_statistics() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.high_whisker, 4.0);
        assert_eq!(b.low_whisker, 1.0);
        assert_eq!(b.outliers, vec![100.0]);
        assert!(box_stats(&[]).is_none());
    }

    #[test]
    fn palette_is_fixed_and_distinct() {
        for (cat, (label, _)) in PronounCategory::FIXED.iter().zip(PALETTE) {
            assert_eq!(cat.label(), label);
        }
        let mut colors: Vec<&str> = PALETTE.iter().map(|p| p.1).collect();
        colors.sort();
        colors.dedup();
        assert_eq!(colors.len(), PALETTE.len());
        assert_eq!(category_color(&PronounCategory::Other("xe".into())), OTHER_COLOR);
    }
}

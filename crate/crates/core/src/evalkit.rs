//! Frame-level scoring of detected intervals against reference annotations,
//! and ROC construction for threshold studies.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::{merge_spans, Detector, PipelineConfig, TimeInterval};
use crate::error::{Error, Result};
use crate::signal::{self, AudioSignal};
use crate::spectral::{self, check_binary_task, OptimizedThreshold, RocCurve, RocPoint};

pub const DEFAULT_EVAL_HOP_S: f64 = 0.01;

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub true_negative: u64,
}

impl Confusion {
    pub fn from_predictions(
        predicted: impl IntoIterator<Item = bool>,
        actual: impl IntoIterator<Item = bool>,
    ) -> Self {
        let mut c = Self::default();
        for (p, a) in predicted.into_iter().zip(actual) {
            c.add(p, a);
        }
        c
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.true_positive += 1,
            (true, false) => self.false_positive += 1,
            (false, true) => self.false_negative += 1,
            (false, false) => self.true_negative += 1,
        }
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_positive += other.true_positive;
        self.false_positive += other.false_positive;
        self.false_negative += other.false_negative;
        self.true_negative += other.true_negative;
    }

    fn ratio(num: u64, den: u64) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn precision(&self) -> f64 {
        Self::ratio(self.true_positive, self.true_positive + self.false_positive)
    }

    pub fn recall(&self) -> f64 {
        Self::ratio(self.true_positive, self.true_positive + self.false_negative)
    }

    pub fn true_positive_rate(&self) -> f64 {
        self.recall()
    }

    pub fn false_positive_rate(&self) -> f64 {
        Self::ratio(self.false_positive, self.false_positive + self.true_negative)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

/// Reference laughter intervals for one recording; sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAnnotation {
    pub intervals: Vec<TimeInterval>,
    pub source_id: String,
}

impl ReferenceAnnotation {
    pub fn new(intervals: Vec<TimeInterval>, source_id: impl Into<String>) -> Self {
        Self { intervals: merge_spans(intervals), source_id: source_id.into() }
    }

    /// `start_s,end_s` CSV with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("start_s,end_s\n");
        for i in &self.intervals {
            let _ = writeln!(out, "{},{}", i.start_s, i.end_s);
        }
        out
    }
}

/// Parses `start_s,end_s` CSV text. Rows are sorted and overlaps merged.
pub fn parse_annotations(text: &str, source_id: &str) -> Result<ReferenceAnnotation> {
    let mut intervals = Vec::new();
    let mut saw_header = false;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            saw_header = true;
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols == ["start_s", "end_s"] {
                continue;
            }
            return Err(Error::MalformedAnnotation {
                line: line_no,
                detail: format!("expected header `start_s,end_s`, got {line:?}"),
            });
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Error::MalformedAnnotation {
                line: line_no,
                detail: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::MalformedAnnotation {
                line: line_no,
                detail: format!("not a number: {s:?}"),
            })
        };
        intervals.push(TimeInterval::new(parse(fields[0])?, parse(fields[1])?)?);
    }
    Ok(ReferenceAnnotation::new(intervals, source_id))
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<ReferenceAnnotation> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_annotations(&text, &path.display().to_string())
}

/// Parses detector output: a JSON array of `{start_s, end_s}` or
/// `start<TAB>end` lines. A `start_s,end_s` header line is skipped, so
/// reference CSVs are accepted too.
pub fn parse_hypothesis(text: &str) -> Result<Vec<TimeInterval>> {
    let trimmed = text.trim_start();
    let spans: Vec<TimeInterval> = if trimmed.starts_with('[') {
        serde_json::from_str::<Vec<TimeInterval>>(trimmed)
            .map_err(|e| Error::MalformedAnnotation { line: e.line(), detail: e.to_string() })?
    } else {
        let mut spans = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || (spans.is_empty() && line == "start_s,end_s") {
                continue;
            }
            let fields: Vec<&str> = line.split(['\t', ',']).map(str::trim).collect();
            let bad = || Error::MalformedAnnotation {
                line: n + 1,
                detail: format!("expected `start<TAB>end`, got {line:?}"),
            };
            if fields.len() != 2 {
                return Err(bad());
            }
            let start: f64 = fields[0].parse().map_err(|_| bad())?;
            let end: f64 = fields[1].parse().map_err(|_| bad())?;
            spans.push(TimeInterval { start_s: start, end_s: end });
        }
        spans
    };
    for s in &spans {
        TimeInterval::new(s.start_s, s.end_s)?;
    }
    Ok(spans)
}

pub fn load_hypothesis(path: impl AsRef<Path>) -> Result<Vec<TimeInterval>> {
    parse_hypothesis(&read_text(path.as_ref())?)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path.to_owned())
        } else {
            Error::Io(e)
        }
    })
}

/// Tick-level precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub frame_hop_s: f64,
}

impl ScoreReport {
    pub fn from_confusion(c: &Confusion, frame_hop_s: f64) -> Self {
        Self {
            true_positive: c.true_positive,
            false_positive: c.false_positive,
            false_negative: c.false_negative,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
            frame_hop_s,
        }
    }

    /// Aligned text, percentages with one decimal.
    pub fn to_text(&self) -> String {
        format!(
            "precision  {:>6.1}\nrecall     {:>6.1}\nF1         {:>6.1}\ntp {} fp {} fn {} (hop {} s)\n",
            100.0 * self.precision,
            100.0 * self.recall,
            100.0 * self.f1,
            self.true_positive,
            self.false_positive,
            self.false_negative,
            self.frame_hop_s,
        )
    }
}

/// Number of evaluation ticks covering `duration_s`.
fn tick_count(duration_s: f64, hop_s: f64) -> usize {
    (duration_s / hop_s - 1e-9).ceil().max(0.0) as usize
}

/// Per-tick labels: tick `k` is on when its center `(k + 0.5) * hop` lies in
/// some interval.
pub fn tick_labels(intervals: &[TimeInterval], duration_s: f64, hop_s: f64) -> Vec<bool> {
    let n = tick_count(duration_s, hop_s);
    let mut labels = vec![false; n];
    for iv in intervals {
        // first and last tick whose center falls in [start, end)
        let first = ((iv.start_s / hop_s - 0.5).ceil().max(0.0)) as usize;
        let mut k = first;
        while k < n && (k as f64 + 0.5) * hop_s < iv.end_s {
            if (k as f64 + 0.5) * hop_s >= iv.start_s {
                labels[k] = true;
            }
            k += 1;
        }
    }
    labels
}

/// Confusion counts over evaluation ticks.
pub fn score_counts(
    detected: &[TimeInterval],
    reference: &ReferenceAnnotation,
    duration_s: f64,
    eval_hop_s: f64,
) -> Result<Confusion> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration must be positive, got {duration_s}")));
    }
    if !(eval_hop_s > 0.0 && eval_hop_s.is_finite()) {
        return Err(Error::InvalidParameter(format!("evaluation hop must be positive, got {eval_hop_s}")));
    }
    let hyp = tick_labels(detected, duration_s, eval_hop_s);
    let truth = tick_labels(&reference.intervals, duration_s, eval_hop_s);
    Ok(Confusion::from_predictions(hyp, truth))
}

pub fn score(
    detected: &[TimeInterval],
    reference: &ReferenceAnnotation,
    duration_s: f64,
    eval_hop_s: f64,
) -> Result<ScoreReport> {
    let c = score_counts(detected, reference, duration_s, eval_hop_s)?;
    Ok(ScoreReport::from_confusion(&c, eval_hop_s))
}

/// ROC over every distinct score used as a `score >= t` threshold, plus the
/// `(0, 0)` endpoint at `t = +inf`.
pub fn roc_points(frame_scores: &[f64], frame_labels: &[bool]) -> Result<RocCurve> {
    check_binary_task(frame_scores, frame_labels)?;
    let mut distinct = frame_scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut points: Vec<RocPoint> = distinct
        .iter()
        .map(|&t| {
            let c = Confusion::from_predictions(
                frame_scores.iter().map(|&s| s >= t),
                frame_labels.iter().copied(),
            );
            RocPoint {
                threshold: t,
                true_positive_rate: c.true_positive_rate(),
                false_positive_rate: c.false_positive_rate(),
            }
        })
        .collect();
    points.push(RocPoint { threshold: f64::INFINITY, true_positive_rate: 0.0, false_positive_rate: 0.0 });
    Ok(RocCurve::from_points(points))
}

/// Standalone SVG plot of one or more ROC curves on the unit square.
pub fn roc_svg(curves: &[(&str, &RocCurve)]) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let x = |fpr: f64| PAD + fpr * SIZE;
    let y = |tpr: f64| PAD + (1.0 - tpr) * SIZE;
    let full = SIZE + 2.0 * PAD;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    for tick in 0..=4 {
        let v = tick as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{v}</text>"#, x(v), PAD + SIZE + 16.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{v}</text>"#, PAD - 6.0, y(v) + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">false positive rate</text>"#,
        PAD + SIZE / 2.0,
        full - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">true positive rate</text>"#,
        PAD + SIZE / 2.0,
        PAD + SIZE / 2.0
    );
    for (n, (name, curve)) in curves.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let mut pts: Vec<(f64, f64)> =
            curve.points.iter().map(|p| (p.false_positive_rate, p.true_positive_rate)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let path: Vec<String> = pts.iter().map(|&(f, t)| format!("{:.2},{:.2}", x(f), y(t))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        let ly = PAD + SIZE - 20.0 - 18.0 * n as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{name} (AUC {:.3})</text>"#,
            PAD + SIZE - 8.0,
            curve.auc
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Frame labels for threshold tuning: a frame is positive when at least half
/// of it lies inside the reference intervals.
pub fn frame_labels(reference: &ReferenceAnnotation, frame_count: usize, frame_size_s: f64, frame_shift_s: f64) -> Vec<bool> {
    (0..frame_count)
        .map(|i| {
            let start = i as f64 * frame_shift_s;
            let frame = TimeInterval { start_s: start, end_s: start + frame_size_s };
            let covered: f64 = reference.intervals.iter().map(|r| r.overlap_s(&frame)).sum();
            covered >= 0.5 * frame_size_s
        })
        .collect()
}

/// Otsu gate versus the F1-optimal fixed gate on one labeled recording.
#[derive(Debug, Clone)]
pub struct ThresholdStudy {
    pub powers_db: Vec<f64>,
    pub labels: Vec<bool>,
    pub otsu_threshold_db: f64,
    pub otsu_f1: f64,
    pub otsu_curve: RocCurve,
    pub optimized: OptimizedThreshold,
}

pub fn threshold_study(
    signal: &AudioSignal,
    reference: &ReferenceAnnotation,
    cfg: &PipelineConfig,
) -> Result<ThresholdStudy> {
    let detector = Detector::new(cfg.clone())?;
    let frames = signal::frame_signal(signal, cfg.frame_size_s, cfg.overlap)?;
    let powers_db: Vec<f64> = detector.frame_powers(&frames)?.iter().map(|p| p.power_db).collect();
    let labels = frame_labels(reference, frames.count(), frames.frame_size_s(), frames.frame_shift_s());
    let otsu = spectral::otsu_threshold(&powers_db)?;
    let (otsu_f1, otsu_curve) = spectral::operating_point(&powers_db, &labels, otsu.threshold)?;
    let optimized = spectral::optimize_threshold(&powers_db, &labels)?;
    Ok(ThresholdStudy { powers_db, labels, otsu_threshold_db: otsu.threshold, otsu_f1, otsu_curve, optimized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn iv(a: f64, b: f64) -> TimeInterval {
        TimeInterval::new(a, b).unwrap()
    }

    #[test]
    fn annotation_parsing() {
        let a = parse_annotations("start_s,end_s\n4.0,7.0\n10.0,11.5\n", "x").unwrap();
        assert_eq!(a.intervals, vec![iv(4.0, 7.0), iv(10.0, 11.5)]);
        let merged = parse_annotations("start_s,end_s\n6.0,8.0\n4.0,7.0\n", "x").unwrap();
        assert_eq!(merged.intervals, vec![iv(4.0, 8.0)]);
        assert!(matches!(
            parse_annotations("start_s,end_s\n5.0,5.0\n", "x"),
            Err(Error::InvalidInterval { .. })
        ));
        assert!(matches!(
            parse_annotations("start_s,end_s\n1.0,abc\n", "x"),
            Err(Error::MalformedAnnotation { line: 2, .. })
        ));
        assert!(matches!(
            parse_annotations("begin,end\n1,2\n", "x"),
            Err(Error::MalformedAnnotation { line: 1, .. })
        ));
        assert!(parse_annotations("start_s,end_s\n1,2,3\n", "x").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let a = ReferenceAnnotation::new(vec![iv(4.0, 7.0), iv(1.25, 2.5)], "clip");
        assert_eq!(parse_annotations(&a.to_csv(), "clip").unwrap(), a);
    }

    #[test]
    fn hypothesis_formats() {
        let json = parse_hypothesis(r#"[{"start_s":3.75,"end_s":7.5}]"#).unwrap();
        let tsv = parse_hypothesis("3.750\t7.500\n").unwrap();
        assert_eq!(json, tsv);
        assert!(parse_hypothesis("3.0\t2.0\n").is_err());
        assert!(parse_hypothesis("3.0\n").is_err());
        assert!(parse_hypothesis("").unwrap().is_empty());
    }

    #[test]
    fn identity_and_empty_scores() {
        let r = ReferenceAnnotation::new(vec![iv(4.0, 7.0)], "r");
        let s = score(&[iv(4.0, 7.0)], &r, 10.0, 0.01).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        assert_eq!(s.true_positive, 300);
        let s = score(&[], &r, 10.0, 0.01).unwrap();
        assert_eq!(s.f1, 0.0);
        assert!(score(&[], &r, 0.0, 0.01).is_err());
        assert!(score(&[], &r, 10.0, 0.0).is_err());
    }

    #[test]
    fn half_overlap_counts() {
        let r = ReferenceAnnotation::new(vec![iv(5.0, 7.0)], "r");
        let s = score(&[iv(4.0, 6.0)], &r, 10.0, 0.01).unwrap();
        assert_eq!((s.true_positive, s.false_positive, s.false_negative), (100, 100, 100));
        assert_abs_diff_eq!(s.f1, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn roc_examples() {
        let sep = roc_points(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(sep.auc, 1.0);

        let flat = roc_points(&[0.5; 4], &[false, true, false, true]).unwrap();
        assert_eq!(flat.points.len(), 2);
        assert_abs_diff_eq!(flat.auc, 0.5, epsilon = 1e-12);

        // positives 0.4 and 0.8 both outrank negatives 0.1 and 0.35
        let c = roc_points(&[0.1, 0.4, 0.35, 0.8], &[false, true, false, true]).unwrap();
        assert_abs_diff_eq!(c.auc, 1.0, epsilon = 1e-12);
        // with labels {-,-,+,+} one of four pairs is misordered
        let c = roc_points(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_abs_diff_eq!(c.auc, 0.75, epsilon = 1e-12);

        assert!(roc_points(&[0.1, 0.2], &[true, true]).is_err());
    }

    #[test]
    fn svg_contains_curves() {
        let c = roc_points(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        let svg = roc_svg(&[("otsu", &c), ("optimized", &c)]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("AUC 0.750"));
    }
}

//! The end-to-end laughter detector.
//!
//! Three stages run over 2.5 s frames:
//!
//! 1. **Power gate.** Each frame's mean Welch PSD (dB) is compared with a
//!    threshold, either Otsu's automatic split of this recording's powers or
//!    a fixed value tuned on development data.
//! 2. **Rhythm gate.** Frames that pass are run through the filterbank
//!    rhythm analysis; a frame whose band-median envelope has a local
//!    maximum becomes a candidate, and its sample standard deviation is kept.
//! 3. **Statistical selection.** A one-sample Student-t confidence interval
//!    is computed over the candidate standard deviations. Candidates at or
//!    above `upper_bound - sd` are laughter. Their frame spans are merged
//!    into time intervals.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::error::{Error, Result};
use crate::rhythm::{self, FmRhythm, RhythmMatrix};
use crate::signal::{self, AudioSignal, Frame, FrameSequence};
use crate::spectral::{self, FramePower, OtsuComputation, WelchEstimator};

pub const DEFAULT_CONFIDENCE_LEVEL: f64 = 0.95;

/// A half-open span of time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeInterval {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite()) || start_s < 0.0 || end_s <= start_s {
            return Err(Error::InvalidInterval { start_s, end_s });
        }
        Ok(Self { start_s, end_s })
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn overlap_s(&self, other: &TimeInterval) -> f64 {
        (self.end_s.min(other.end_s) - self.start_s.max(other.start_s)).max(0.0)
    }

    /// Intersection over union of the two spans.
    pub fn iou(&self, other: &TimeInterval) -> f64 {
        let inter = self.overlap_s(other);
        inter / (self.duration_s() + other.duration_s() - inter)
    }
}

/// Sorts intervals and merges any that overlap or touch.
pub fn merge_spans(mut spans: Vec<TimeInterval>) -> Vec<TimeInterval> {
    spans.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut merged: Vec<TimeInterval> = Vec::with_capacity(spans.len());
    for s in spans {
        match merged.last_mut() {
            Some(last) if s.start_s <= last.end_s => last.end_s = last.end_s.max(s.end_s),
            _ => merged.push(s),
        }
    }
    merged
}

/// How the power gate threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ThresholdMode {
    /// Otsu split of the recording's own frame powers.
    #[default]
    Otsu,
    /// Fixed power threshold in dB.
    Fixed(f64),
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("otsu") {
            return Ok(Self::Otsu);
        }
        if let Some(v) = s.strip_prefix("fixed:") {
            let db: f64 = v.trim().parse().map_err(|_| {
                Error::Config(format!("fixed threshold must be a number of dB, got {v:?}"))
            })?;
            if !db.is_finite() {
                return Err(Error::Config(format!("fixed threshold must be finite, got {db}")));
            }
            return Ok(Self::Fixed(db));
        }
        Err(Error::Config(format!("threshold mode must be `otsu` or `fixed:<dB>`, got {s:?}")))
    }
}

impl TryFrom<String> for ThresholdMode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ThresholdMode> for String {
    fn from(m: ThresholdMode) -> String {
        m.to_string()
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Otsu => f.write_str("otsu"),
            Self::Fixed(db) => write!(f, "fixed:{db}"),
        }
    }
}

/// Every tunable of the pipeline. Defaults reproduce the reference protocol:
/// 2.5 s frames at 50 % overlap, 200 Hz base pitch, 95 % confidence, Otsu
/// gating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub frame_size_s: f64,
    pub overlap: f64,
    pub welch_segment_len: usize,
    pub welch_overlap: f64,
    pub base_pitch_hz: f64,
    pub subwindow_s: f64,
    pub subwindow_overlap: f64,
    pub confidence_level: f64,
    pub threshold_mode: ThresholdMode,
    pub min_prominence: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            frame_size_s: signal::DEFAULT_FRAME_SIZE_S,
            overlap: signal::DEFAULT_OVERLAP,
            welch_segment_len: spectral::DEFAULT_SEGMENT_LEN,
            welch_overlap: spectral::DEFAULT_SEGMENT_OVERLAP,
            base_pitch_hz: rhythm::DEFAULT_BASE_PITCH_HZ,
            subwindow_s: rhythm::DEFAULT_SUBWINDOW_S,
            subwindow_overlap: rhythm::DEFAULT_SUBWINDOW_OVERLAP,
            confidence_level: DEFAULT_CONFIDENCE_LEVEL,
            threshold_mode: ThresholdMode::Otsu,
            min_prominence: rhythm::DEFAULT_MIN_PROMINENCE,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frame_size_s", self.frame_size_s),
            ("base_pitch_hz", self.base_pitch_hz),
            ("subwindow_s", self.subwindow_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let fractions = [
            ("overlap", self.overlap),
            ("welch_overlap", self.welch_overlap),
            ("subwindow_overlap", self.subwindow_overlap),
        ];
        for (name, v) in fractions {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::Config(format!(
                "confidence_level must lie in (0, 1), got {}",
                self.confidence_level
            )));
        }
        if self.welch_segment_len < 2 || !self.welch_segment_len.is_power_of_two() {
            return Err(Error::Config(format!(
                "welch_segment_len must be a power of two, got {}",
                self.welch_segment_len
            )));
        }
        if self.subwindow_s >= self.frame_size_s {
            return Err(Error::Config("subwindow_s must be shorter than frame_size_s".into()));
        }
        if !(self.min_prominence >= 0.0 && self.min_prominence < 1.0) {
            return Err(Error::Config(format!(
                "min_prominence must lie in [0, 1), got {}",
                self.min_prominence
            )));
        }
        Ok(())
    }

    pub fn frame_shift_s(&self) -> f64 {
        self.frame_size_s * (1.0 - self.overlap)
    }
}

/// Standard deviations of the candidate frames, with their frame indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateStats {
    pub sigmas: Vec<f64>,
    pub frame_indices: Vec<usize>,
}

impl CandidateStats {
    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn push(&mut self, frame_index: usize, sigma: f64) {
        self.frame_indices.push(frame_index);
        self.sigmas.push(sigma);
    }
}

/// Two-sided Student-t confidence interval for a mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceBounds {
    pub lower: f64,
    pub upper: f64,
    pub sample_mean: f64,
    pub sample_sd: f64,
    pub n: usize,
    pub level: f64,
}

/// Sample standard deviation (n - 1 denominator), two-pass.
pub fn frame_std(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    // shifting by the first sample keeps constant input exactly zero
    let shift = samples[0];
    let mean = samples.iter().map(|x| x - shift).sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|x| (x - shift - mean) * (x - shift - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Two-sided critical value `t` with `P(|T| <= t) = level` for Student's t
/// with `dof` degrees of freedom, via the inverse regularized incomplete
/// beta function.
pub fn t_critical(level: f64, dof: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::InvalidParameter(format!("degrees of freedom must be positive, got {dof}")));
    }
    // P(|T| > t) = I_x(dof/2, 1/2) with x = dof / (dof + t^2)
    let x = inv_beta_reg(dof / 2.0, 0.5, 1.0 - level);
    Ok((dof * (1.0 - x) / x).sqrt())
}

/// One-sample t interval for the mean of `values`:
/// `mean +/- t_crit(level, n - 1) * sd / sqrt(n)`.
pub fn t_confidence(values: &[f64], level: f64) -> Result<ConfidenceBounds> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = frame_std(values);
    let half_width = t_critical(level, (n - 1) as f64)? * sd / (n as f64).sqrt();
    Ok(ConfidenceBounds {
        lower: mean - half_width,
        upper: mean + half_width,
        sample_mean: mean,
        sample_sd: sd,
        n,
        level,
    })
}

/// Selection threshold: upper confidence bound minus the sample sd.
pub fn laughter_threshold(bounds: &ConfidenceBounds) -> f64 {
    bounds.upper - bounds.sample_sd
}

/// Frame indices whose sigma is at least `threshold`, ascending.
pub fn select_laughter_frames(stats: &CandidateStats, threshold: f64) -> Vec<usize> {
    let mut selected: Vec<usize> = stats
        .sigmas
        .iter()
        .zip(&stats.frame_indices)
        .filter(|(&s, _)| s >= threshold)
        .map(|(_, &i)| i)
        .collect();
    selected.sort_unstable();
    selected
}

/// Maps frame indices to their spans and merges overlapping ones.
pub fn merge_intervals(frame_indices: &[usize], cfg: &PipelineConfig) -> Vec<TimeInterval> {
    merge_frame_spans(frame_indices, cfg.frame_size_s, cfg.frame_shift_s())
}

pub fn merge_frame_spans(frame_indices: &[usize], frame_size_s: f64, frame_shift_s: f64) -> Vec<TimeInterval> {
    let spans = frame_indices
        .iter()
        .map(|&i| {
            let start_s = i as f64 * frame_shift_s;
            TimeInterval { start_s, end_s: start_s + frame_size_s }
        })
        .collect();
    merge_spans(spans)
}

/// Everything the pipeline computed for one recording.
#[derive(Debug, Clone, Default)]
pub struct DetectionReport {
    pub frame_count: usize,
    pub frame_size_s: f64,
    pub frame_shift_s: f64,
    pub powers: Vec<FramePower>,
    /// Present in Otsu mode.
    pub otsu: Option<OtsuComputation>,
    pub gate_threshold_db: Option<f64>,
    /// Frames that passed the power gate.
    pub gated: Vec<usize>,
    pub candidates: CandidateStats,
    pub bounds: Option<ConfidenceBounds>,
    pub selection_threshold: Option<f64>,
    pub selected: Vec<usize>,
    pub intervals: Vec<TimeInterval>,
    /// Rhythm matrices of gated frames, kept only on request.
    pub rhythm: Vec<(usize, f64, RhythmMatrix)>,
}

/// Reusable detector. Holds a validated config and, optionally, its own
/// worker pool.
pub struct Detector {
    cfg: PipelineConfig,
    welch: WelchEstimator,
    pool: Option<rayon::ThreadPool>,
}

impl fmt::Debug for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Detector")
            .field("cfg", &self.cfg)
            .field("threads", &self.pool.as_ref().map(|p| p.current_num_threads()))
            .finish()
    }
}

struct FrameOutcome {
    candidate: bool,
    sigma: f64,
    matrix: Option<RhythmMatrix>,
}

impl Detector {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let welch = WelchEstimator::new(cfg.welch_segment_len, cfg.welch_overlap)?;
        Ok(Self { cfg, welch, pool: None })
    }

    /// Runs frame-parallel stages on a dedicated pool of `threads` workers.
    pub fn with_threads(mut self, threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
        self.pool = Some(pool);
        Ok(self)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn detect(&self, signal: &AudioSignal) -> Result<Vec<TimeInterval>> {
        Ok(self.analyze(signal, false)?.intervals)
    }

    pub fn analyze(&self, signal: &AudioSignal, keep_rhythm: bool) -> Result<DetectionReport> {
        match &self.pool {
            Some(pool) => pool.install(|| self.analyze_inner(signal, keep_rhythm)),
            None => self.analyze_inner(signal, keep_rhythm),
        }
    }

    /// Frame powers in dB, computed in parallel and returned in frame order.
    pub fn frame_powers(&self, frames: &FrameSequence<'_>) -> Result<Vec<FramePower>> {
        let run = || {
            (0..frames.count())
                .into_par_iter()
                .map(|i| {
                    let frame = frames.get(i).expect("index below count");
                    self.welch.estimate(&frame).map(|psd| spectral::frame_power(&psd))
                })
                .collect::<Result<Vec<_>>>()
        };
        match &self.pool {
            Some(pool) => pool.install(run),
            None => run(),
        }
    }

    fn analyze_inner(&self, signal: &AudioSignal, keep_rhythm: bool) -> Result<DetectionReport> {
        let cfg = &self.cfg;
        if signal.is_empty() {
            return Ok(DetectionReport {
                frame_size_s: cfg.frame_size_s,
                frame_shift_s: cfg.frame_shift_s(),
                ..Default::default()
            });
        }
        let frames = signal::frame_signal(signal, cfg.frame_size_s, cfg.overlap)?;
        let mut report = DetectionReport {
            frame_count: frames.count(),
            frame_size_s: frames.frame_size_s(),
            frame_shift_s: frames.frame_shift_s(),
            ..Default::default()
        };
        if frames.is_empty() {
            return Ok(report);
        }
        let plan = rhythm::band_plan(cfg.base_pitch_hz, signal.sample_rate_hz())?;
        let analyzer = FmRhythm::new(plan, signal.sample_rate_hz(), cfg.subwindow_s, cfg.subwindow_overlap)?;

        report.powers = self.frame_powers(&frames)?;
        let db: Vec<f64> = report.powers.iter().map(|p| p.power_db).collect();
        report.gated = match cfg.threshold_mode {
            ThresholdMode::Otsu => {
                let otsu = spectral::otsu_threshold(&db)?;
                let gated = (0..db.len()).filter(|&i| otsu.passes(db[i])).collect();
                report.gate_threshold_db = Some(otsu.threshold);
                report.otsu = Some(otsu);
                gated
            }
            ThresholdMode::Fixed(t) => {
                report.gate_threshold_db = Some(t);
                (0..db.len()).filter(|&i| db[i] >= t).collect()
            }
        };

        let outcomes = report
            .gated
            .par_iter()
            .map(|&i| {
                let frame = frames.get(i).expect("gated index below count");
                self.rhythm_stage(&analyzer, &frame, keep_rhythm)
            })
            .collect::<Result<Vec<_>>>()?;

        for (&i, outcome) in report.gated.iter().zip(outcomes) {
            if outcome.candidate {
                report.candidates.push(i, outcome.sigma);
            }
            if let Some(m) = outcome.matrix {
                report.rhythm.push((i, i as f64 * report.frame_shift_s, m));
            }
        }

        if report.candidates.len() < 2 {
            return Ok(report);
        }
        let bounds = t_confidence(&report.candidates.sigmas, cfg.confidence_level)?;
        let threshold = laughter_threshold(&bounds);
        report.bounds = Some(bounds);
        report.selection_threshold = Some(threshold);
        report.selected = select_laughter_frames(&report.candidates, threshold);
        report.intervals = merge_frame_spans(&report.selected, report.frame_size_s, report.frame_shift_s);
        Ok(report)
    }

    fn rhythm_stage(&self, analyzer: &FmRhythm, frame: &Frame<'_>, keep: bool) -> Result<FrameOutcome> {
        let matrix = analyzer.analyze(frame)?;
        let envelope = rhythm::band_median_envelope_with_prominence(&matrix, self.cfg.min_prominence)?;
        Ok(FrameOutcome {
            candidate: envelope.rhythmic,
            sigma: if envelope.rhythmic { frame_std(frame.samples) } else { 0.0 },
            matrix: keep.then_some(matrix),
        })
    }
}

/// Runs the full pipeline with `cfg` on the global worker pool.
pub fn detect(signal: &AudioSignal, cfg: &PipelineConfig) -> Result<Vec<TimeInterval>> {
    Detector::new(cfg.clone())?.detect(signal)
}

/// `start<TAB>end` lines with millisecond precision.
pub fn format_tsv(intervals: &[TimeInterval]) -> String {
    intervals
        .iter()
        .map(|i| format!("{:.3}\t{:.3}\n", i.start_s, i.end_s))
        .collect()
}

/// JSON array of `{"start_s": .., "end_s": ..}` objects.
pub fn format_json(intervals: &[TimeInterval]) -> String {
    serde_json::to_string(intervals).expect("intervals serialize")
}

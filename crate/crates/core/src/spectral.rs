//! Welch power spectral density, per-frame power, and the automatic PSD
//! threshold used to gate frames before rhythm analysis.
//!
//! The gate works on one scalar per frame: the mean of the frame's Welch PSD
//! expressed in dB. The automatic threshold is Otsu's between-class variance
//! maximizer over a 256-bin histogram of those powers. The alternative,
//! [`optimize_threshold`], sweeps every distinct partition of labeled
//! development powers and keeps the one with the best F1.

use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::evalkit::Confusion;
use crate::signal::Frame;

pub const DEFAULT_SEGMENT_LEN: usize = 512;
pub const DEFAULT_SEGMENT_OVERLAP: f64 = 0.5;
/// Power assigned to frames whose PSD is zero or vanishingly small.
pub const POWER_FLOOR_DB: f64 = -120.0;
pub const OTSU_BINS: usize = 256;

/// One-sided power spectral density of a frame, in power per Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub values: Vec<f64>,
    pub bin_width_hz: f64,
    pub frame_index: usize,
}

impl PsdEstimate {
    /// Integral of the PSD over frequency (rectangle rule).
    pub fn total_power(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bin_width_hz
    }

    pub fn peak_bin(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePower {
    pub frame_index: usize,
    pub power_db: f64,
}

/// Welch estimator with a cached FFT plan and Hann taper.
#[derive(Clone)]
pub struct WelchEstimator {
    segment_len: usize,
    step: usize,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for WelchEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WelchEstimator")
            .field("segment_len", &self.segment_len)
            .field("step", &self.step)
            .finish()
    }
}

impl WelchEstimator {
    pub fn new(segment_len: usize, segment_overlap: f64) -> Result<Self> {
        if segment_len < 2 || !segment_len.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "Welch segment length must be a power of two >= 2, got {segment_len}"
            )));
        }
        if !(0.0..1.0).contains(&segment_overlap) {
            return Err(Error::InvalidParameter(format!(
                "Welch overlap must lie in [0, 1), got {segment_overlap}"
            )));
        }
        let step = ((segment_len as f64 * (1.0 - segment_overlap)).round() as usize).max(1);
        let window = hann_periodic(segment_len);
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(segment_len);
        Ok(Self { segment_len, step, window, window_power, fft })
    }

    pub fn segment_len(&self) -> usize {
        self.segment_len
    }

    pub fn estimate(&self, frame: &Frame<'_>) -> Result<PsdEstimate> {
        let x = frame.samples;
        let n = self.segment_len;
        if n > x.len() {
            return Err(Error::InvalidParameter(format!(
                "Welch segment of {n} samples exceeds frame of {} samples",
                x.len()
            )));
        }
        let fs = frame.sample_rate_hz as f64;
        let n_bins = n / 2 + 1;
        let n_segments = (x.len() - n) / self.step + 1;
        let mut acc = vec![0.0; n_bins];
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for seg in 0..n_segments {
            let start = seg * self.step;
            for ((b, &s), &w) in buf.iter_mut().zip(&x[start..start + n]).zip(&self.window) {
                *b = Complex::new(s * w, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (a, b) in acc.iter_mut().zip(&buf[..n_bins]) {
                *a += b.norm_sqr();
            }
        }
        let scale = 1.0 / (fs * self.window_power * n_segments as f64);
        let values = acc
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                // one-sided: fold negative frequencies onto positive bins
                let fold = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                p * scale * fold
            })
            .collect();
        Ok(PsdEstimate { values, bin_width_hz: fs / n as f64, frame_index: frame.index })
    }
}

/// Averaged modified periodogram of `frame` using Hann-tapered segments.
pub fn welch_psd(frame: &Frame<'_>, segment_len: usize, segment_overlap: f64) -> Result<PsdEstimate> {
    WelchEstimator::new(segment_len, segment_overlap)?.estimate(frame)
}

fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
            s * s
        })
        .collect()
}

/// Mean PSD in dB, floored at [`POWER_FLOOR_DB`].
pub fn frame_power(psd: &PsdEstimate) -> FramePower {
    let mean = if psd.values.is_empty() {
        0.0
    } else {
        psd.values.iter().sum::<f64>() / psd.values.len() as f64
    };
    let db = if mean > 0.0 { 10.0 * mean.log10() } else { POWER_FLOOR_DB };
    FramePower { frame_index: psd.frame_index, power_db: db.max(POWER_FLOOR_DB) }
}

/// Full record of one Otsu threshold computation.
///
/// Powers are binned into [`OTSU_BINS`] equal bins over `[min, max]`. A split
/// `k` puts bins `0..k` in the lower class and `k..` in the upper class; the
/// chosen split maximizes the between-class variance
/// `(mu_total * omega_k - mu_k)^2 / (omega_k * (1 - omega_k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct OtsuComputation {
    pub sorted_powers: Vec<f64>,
    pub histogram: Vec<u64>,
    pub bin_probability: Vec<f64>,
    /// `class_probability[k]` is the mass of bins `0..k`; index 0..=256.
    pub class_probability: Vec<f64>,
    /// `class_mean[k]` is the first moment (in bin units) of bins `0..k`.
    pub class_mean: Vec<f64>,
    pub total_mean: f64,
    /// Between-class variance per split, index 0..=256; the end splits are 0.
    pub between_class_variance: Vec<f64>,
    /// Index of the first upper-class bin. Zero only for degenerate input.
    pub split: usize,
    pub threshold: f64,
    pub min: f64,
    pub max: f64,
}

impl OtsuComputation {
    pub fn len(&self) -> usize {
        self.sorted_powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_powers.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.split == 0
    }

    /// Histogram bin a power falls into, using the computation's geometry.
    pub fn bin_of(&self, power: f64) -> usize {
        histogram_bin(power, self.min, self.max)
    }

    /// Whether `power` lands in the upper class.
    pub fn passes(&self, power: f64) -> bool {
        self.bin_of(power) >= self.split
    }
}

pub(crate) fn histogram_bin(x: f64, min: f64, max: f64) -> usize {
    if max <= min {
        return 0;
    }
    let pos = (x - min) / (max - min) * OTSU_BINS as f64;
    if pos <= 0.0 {
        0
    } else {
        (pos.floor() as usize).min(OTSU_BINS - 1)
    }
}

/// Between-class variance of a split from integer class statistics:
/// `count_below` values with bin-index sum `moment_below`, out of `total`
/// values with bin-index sum `total_moment`.
///
/// Equals `(mu_L * omega - mu_k)^2 / (omega * (1 - omega))` with
/// `omega = count_below / total`, `mu_k = moment_below / total`,
/// `mu_L = total_moment / total`.
pub fn between_class_variance(count_below: u64, moment_below: u64, total: u64, total_moment: u64) -> f64 {
    if count_below == 0 || count_below >= total {
        return 0.0;
    }
    let num = total_moment as i128 * count_below as i128 - total as i128 * moment_below as i128;
    let num = num as f64;
    let l = total as f64;
    num * num / (l * l * count_below as f64 * (total - count_below) as f64)
}

/// Between-class variance kept as the exact ratio
/// `(S*n - L*s)^2 / (n * (L - n))` so splits compare without rounding.
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    numerator: i128,
    denominator: i128,
}

impl SplitScore {
    const ZERO: Self = Self { numerator: 0, denominator: 1 };

    fn new(count_below: u64, moment_below: u64, total: u64, total_moment: u64) -> Self {
        if count_below == 0 || count_below >= total {
            return Self::ZERO;
        }
        let diff = total_moment as i128 * count_below as i128 - total as i128 * moment_below as i128;
        Self {
            numerator: diff * diff,
            denominator: count_below as i128 * (total - count_below) as i128,
        }
    }

    fn exceeds(&self, other: &Self) -> bool {
        match (
            self.numerator.checked_mul(other.denominator),
            other.numerator.checked_mul(self.denominator),
        ) {
            (Some(a), Some(b)) => a > b,
            _ => {
                self.numerator as f64 / self.denominator as f64
                    > other.numerator as f64 / other.denominator as f64
            }
        }
    }
}

/// Otsu threshold over frame powers (dB). Ties resolve to the lowest split.
pub fn otsu_threshold(powers: &[f64]) -> Result<OtsuComputation> {
    if powers.is_empty() {
        return Err(Error::EmptyInput("no powers to threshold"));
    }
    if let Some(i) = powers.iter().position(|p| !p.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut sorted = powers.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    let total = sorted.len() as u64;
    let l = total as f64;

    let mut histogram = vec![0u64; OTSU_BINS];
    for &p in &sorted {
        histogram[histogram_bin(p, min, max)] += 1;
    }
    let bin_probability: Vec<f64> = histogram.iter().map(|&c| c as f64 / l).collect();
    let total_moment: u64 = histogram.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();

    let mut class_probability = vec![0.0; OTSU_BINS + 1];
    let mut class_mean = vec![0.0; OTSU_BINS + 1];
    let mut between = vec![0.0; OTSU_BINS + 1];
    let (mut count_below, mut moment_below) = (0u64, 0u64);
    let mut split = 0;
    let mut best = SplitScore::ZERO;
    for k in 1..=OTSU_BINS {
        count_below += histogram[k - 1];
        moment_below += (k as u64 - 1) * histogram[k - 1];
        class_probability[k] = count_below as f64 / l;
        class_mean[k] = moment_below as f64 / l;
        if k == OTSU_BINS {
            break;
        }
        between[k] = between_class_variance(count_below, moment_below, total, total_moment);
        let score = SplitScore::new(count_below, moment_below, total, total_moment);
        if score.exceeds(&best) {
            best = score;
            split = k;
        }
    }
    let threshold = if split == 0 {
        min
    } else {
        min + split as f64 * (max - min) / OTSU_BINS as f64
    };
    Ok(OtsuComputation {
        sorted_powers: sorted,
        histogram,
        bin_probability,
        class_probability,
        class_mean,
        total_mean: total_moment as f64 / l,
        between_class_variance: between,
        split,
        threshold,
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub true_positive_rate: f64,
    pub false_positive_rate: f64,
}

/// Receiver operating characteristic over a threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Sorted by ascending threshold.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Builds a curve from points, sorting them by threshold and computing
    /// the trapezoidal area under (FPR, TPR).
    pub fn from_points(mut points: Vec<RocPoint>) -> Self {
        points.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
        let mut by_fpr: Vec<(f64, f64)> =
            points.iter().map(|p| (p.false_positive_rate, p.true_positive_rate)).collect();
        by_fpr.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let auc = by_fpr
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum();
        Self { points, auc }
    }

    /// `threshold,tpr,fpr` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,tpr,fpr\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.threshold, p.true_positive_rate, p.false_positive_rate);
        }
        out
    }
}

/// Result of the brute-force threshold sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedThreshold {
    pub threshold: f64,
    pub f1: f64,
    pub curve: RocCurve,
}

/// Brute-force PSD threshold: sweeps the lowest power, every midpoint between
/// consecutive distinct powers, and `+inf`, scoring the classifier
/// `power >= threshold` against `labels` by F1. Ties go to the lower
/// threshold.
pub fn optimize_threshold(powers: &[f64], labels: &[bool]) -> Result<OptimizedThreshold> {
    check_binary_task(powers, labels)?;
    let mut distinct = powers.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    let mut thresholds = Vec::with_capacity(distinct.len() + 1);
    thresholds.push(distinct[0]);
    thresholds.extend(distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    thresholds.push(f64::INFINITY);

    let mut best = (f64::NAN, -1.0);
    let mut points = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let c = Confusion::from_predictions(powers.iter().map(|&p| p >= t), labels.iter().copied());
        let f1 = c.f1();
        if f1 > best.1 {
            best = (t, f1);
        }
        points.push(RocPoint {
            threshold: t,
            true_positive_rate: c.true_positive_rate(),
            false_positive_rate: c.false_positive_rate(),
        });
    }
    Ok(OptimizedThreshold { threshold: best.0, f1: best.1, curve: RocCurve::from_points(points) })
}

/// Three-point ROC of the fixed decision `power >= threshold`, plus its F1.
pub fn operating_point(powers: &[f64], labels: &[bool], threshold: f64) -> Result<(f64, RocCurve)> {
    check_binary_task(powers, labels)?;
    let c = Confusion::from_predictions(powers.iter().map(|&p| p >= threshold), labels.iter().copied());
    let lowest = powers.iter().copied().fold(f64::INFINITY, f64::min);
    let mut points = vec![RocPoint {
        threshold,
        true_positive_rate: c.true_positive_rate(),
        false_positive_rate: c.false_positive_rate(),
    }];
    if threshold > lowest {
        points.push(RocPoint { threshold: lowest, true_positive_rate: 1.0, false_positive_rate: 1.0 });
    }
    points.push(RocPoint { threshold: f64::INFINITY, true_positive_rate: 0.0, false_positive_rate: 0.0 });
    Ok((c.f1(), RocCurve::from_points(points)))
}

pub(crate) fn check_binary_task(values: &[f64], labels: &[bool]) -> Result<()> {
    if values.len() != labels.len() {
        return Err(Error::LengthMismatch { left: values.len(), right: labels.len() });
    }
    if let Some(i) = values.iter().position(|p| p.is_nan()) {
        return Err(Error::NonFinite(i));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

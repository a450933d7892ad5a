//! Filterbank rhythm analysis of high-power frames.
//!
//! Each frame is cut into short tapered subwindows. A subwindow's spectrum
//! is partitioned into six octave-spaced bands anchored on a 200 Hz pitch;
//! every band is brought back to the time domain, full-wave rectified, and
//! smoothed with a half-hanning kernel. The RMS of the smoothed envelope
//! becomes one cell of a `subwindows x 6` matrix. The row-wise median over
//! bands gives a time envelope whose local maxima mark rhythmic pulses.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::Frame;

pub const N_BANDS: usize = 6;
pub const DEFAULT_BASE_PITCH_HZ: f64 = 200.0;
pub const DEFAULT_SUBWINDOW_S: f64 = 0.05;
pub const DEFAULT_SUBWINDOW_OVERLAP: f64 = 0.5;
/// Prominence a local maximum of the band-median envelope must have, as a
/// fraction of the envelope peak, for the detector to call a frame rhythmic:
/// the envelope must fall to half its peak between pulses.
pub const DEFAULT_MIN_PROMINENCE: f64 = 0.5;

/// The six oscillator coefficients `cos^2(2 i pi / l)`, `i = 1..=6`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorWindow {
    pub length: usize,
    pub coefficients: [f64; 6],
}

pub fn hanning_oscillator(length: usize) -> Result<OscillatorWindow> {
    if length == 0 {
        return Err(Error::InvalidParameter("oscillator length must be at least 1".into()));
    }
    let mut coefficients = [0.0; 6];
    for (i, c) in coefficients.iter_mut().enumerate() {
        let phase = 2.0 * (i + 1) as f64 * PI / length as f64;
        *c = phase.cos().powi(2);
    }
    Ok(OscillatorWindow { length, coefficients })
}

/// Raised-cosine taper applied to every subwindow before its FFT: the
/// oscillator shape `cos^2` stretched to one period over `length` samples.
pub fn oscillator_taper(length: usize) -> Vec<f64> {
    (0..length)
        .map(|i| (PI * (i as f64 / length as f64 - 0.5)).cos().powi(2))
        .collect()
}

/// Six contiguous bands `[0, p] [p, 2p] [2p, 4p] [4p, 8p] [8p, 16p] [16p, nyquist]`
/// stored as twelve edge values.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPlan {
    pub base_pitch_hz: f64,
    pub edges_hz: [f64; 12],
}

impl BandPlan {
    pub fn band(&self, i: usize) -> (f64, f64) {
        (self.edges_hz[2 * i], self.edges_hz[2 * i + 1])
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.edges_hz[11]
    }

    /// Band holding `freq_hz`. Lower edges are inclusive; the top band also
    /// holds the Nyquist frequency.
    pub fn band_of(&self, freq_hz: f64) -> usize {
        (1..N_BANDS)
            .rev()
            .find(|&i| freq_hz >= self.edges_hz[2 * i])
            .unwrap_or(0)
    }
}

pub fn band_plan(base_pitch_hz: f64, sample_rate_hz: u32) -> Result<BandPlan> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    if !(base_pitch_hz > 0.0 && base_pitch_hz.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "base pitch must be positive, got {base_pitch_hz}"
        )));
    }
    if 16.0 * base_pitch_hz >= nyquist {
        return Err(Error::InvalidParameter(format!(
            "top band edge {} Hz is not below the {} Hz Nyquist frequency",
            16.0 * base_pitch_hz,
            nyquist
        )));
    }
    let mut edges_hz = [0.0; 12];
    let mut lower = 0.0;
    for i in 0..N_BANDS {
        let upper = if i + 1 < N_BANDS { base_pitch_hz * (1u32 << i) as f64 } else { nyquist };
        edges_hz[2 * i] = lower;
        edges_hz[2 * i + 1] = upper;
        lower = upper;
    }
    Ok(BandPlan { base_pitch_hz, edges_hz })
}

/// Per-subwindow, per-band envelope magnitudes for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RhythmMatrix {
    pub values: Vec<[f64; N_BANDS]>,
    pub subwindow_hop_s: f64,
}

impl RhythmMatrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        N_BANDS
    }

    pub fn column(&self, band: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[band]).collect()
    }

    /// CSV rows `frame,row,time_s,band1..band6` for inspection.
    pub fn write_csv_rows(&self, frame_index: usize, frame_start_s: f64, out: &mut String) {
        for (j, row) in self.values.iter().enumerate() {
            let _ = write!(out, "{frame_index},{j},{:.4}", frame_start_s + j as f64 * self.subwindow_hop_s);
            for v in row {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
    }
}

pub const RHYTHM_CSV_HEADER: &str = "frame,row,time_s,band1,band2,band3,band4,band5,band6\n";

/// Band-median envelope `c` of a [`RhythmMatrix`] and its rhythmicity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianEnvelope {
    pub values: Vec<f64>,
    pub rhythmic: bool,
}

/// Filterbank analyzer with cached FFT plans and kernels.
#[derive(Clone)]
pub struct FmRhythm {
    plan: BandPlan,
    sample_rate_hz: u32,
    subwindow_len: usize,
    hop: usize,
    taper: Vec<f64>,
    band_of_bin: Vec<usize>,
    smoother_spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FmRhythm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FmRhythm")
            .field("plan", &self.plan)
            .field("subwindow_len", &self.subwindow_len)
            .field("hop", &self.hop)
            .finish()
    }
}

impl FmRhythm {
    pub fn new(
        plan: BandPlan,
        sample_rate_hz: u32,
        subwindow_s: f64,
        subwindow_overlap: f64,
    ) -> Result<Self> {
        if (plan.nyquist_hz() - sample_rate_hz as f64 / 2.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "band plan built for Nyquist {} Hz, signal Nyquist is {} Hz",
                plan.nyquist_hz(),
                sample_rate_hz as f64 / 2.0
            )));
        }
        if !(subwindow_s > 0.0) || !(0.0..1.0).contains(&subwindow_overlap) {
            return Err(Error::InvalidParameter(format!(
                "invalid subwindow geometry: {subwindow_s} s at overlap {subwindow_overlap}"
            )));
        }
        let fs = sample_rate_hz as f64;
        let subwindow_len = (subwindow_s * fs).round() as usize;
        if subwindow_len < 2 {
            return Err(Error::InvalidParameter("subwindow shorter than two samples".into()));
        }
        let hop = ((subwindow_s * (1.0 - subwindow_overlap) * fs).round() as usize).max(1);

        let band_of_bin = (0..subwindow_len)
            .map(|k| {
                let folded = k.min(subwindow_len - k);
                plan.band_of(folded as f64 * fs / subwindow_len as f64)
            })
            .collect();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(subwindow_len);
        let inverse = planner.plan_fft_inverse(subwindow_len);

        let kernel = half_hanning(subwindow_len);
        let mut smoother_spectrum: Vec<Complex<f64>> =
            kernel.iter().map(|&h| Complex::new(h, 0.0)).collect();
        forward.process(&mut smoother_spectrum);
        // fold the inverse transform's 1/n into the kernel
        let inv_n = 1.0 / subwindow_len as f64;
        for c in &mut smoother_spectrum {
            *c *= inv_n;
        }

        Ok(Self {
            plan,
            sample_rate_hz,
            subwindow_len,
            hop,
            taper: oscillator_taper(subwindow_len),
            band_of_bin,
            smoother_spectrum,
            forward,
            inverse,
        })
    }

    pub fn plan(&self) -> &BandPlan {
        &self.plan
    }

    pub fn subwindow_len(&self) -> usize {
        self.subwindow_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Number of matrix rows produced for a frame of `frame_len` samples.
    pub fn rows_for(&self, frame_len: usize) -> usize {
        if frame_len < self.subwindow_len {
            0
        } else {
            (frame_len - self.subwindow_len) / self.hop + 1
        }
    }

    /// Splits the energy of a two-sided spectrum (length = subwindow) over
    /// the six bands.
    pub fn band_energies(&self, spectrum: &[Complex<f64>]) -> [f64; N_BANDS] {
        let mut energy = [0.0; N_BANDS];
        for (c, &b) in spectrum.iter().zip(&self.band_of_bin) {
            energy[b] += c.norm_sqr();
        }
        energy
    }

    /// Tapered spectrum of one subwindow.
    pub fn subwindow_spectrum(&self, samples: &[f64]) -> Vec<Complex<f64>> {
        let mut spectrum: Vec<Complex<f64>> = samples
            .iter()
            .zip(&self.taper)
            .map(|(&s, &w)| Complex::new(s * w, 0.0))
            .collect();
        self.forward.process(&mut spectrum);
        spectrum
    }

    pub fn analyze(&self, frame: &Frame<'_>) -> Result<RhythmMatrix> {
        if frame.sample_rate_hz != self.sample_rate_hz {
            return Err(Error::InvalidParameter(format!(
                "frame rate {} Hz does not match analyzer rate {} Hz",
                frame.sample_rate_hz, self.sample_rate_hz
            )));
        }
        let n = self.subwindow_len;
        if n > frame.samples.len() {
            return Err(Error::InvalidParameter(format!(
                "subwindow of {n} samples exceeds frame of {} samples",
                frame.samples.len()
            )));
        }
        let rows = self.rows_for(frame.samples.len());
        let zero = Complex::new(0.0, 0.0);
        let mut band = vec![zero; n];
        let mut scratch = vec![zero; self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];
        let mut values = Vec::with_capacity(rows);
        for r in 0..rows {
            let start = r * self.hop;
            let spectrum = self.subwindow_spectrum(&frame.samples[start..start + n]);
            let mut row = [0.0; N_BANDS];
            for (b, cell) in row.iter_mut().enumerate() {
                for ((dst, src), &owner) in band.iter_mut().zip(&spectrum).zip(&self.band_of_bin) {
                    *dst = if owner == b { *src } else { zero };
                }
                if band.iter().all(|c| *c == zero) {
                    continue;
                }
                self.inverse.process_with_scratch(&mut band, &mut scratch);
                // band signal back in time (real since the band is conjugate
                // symmetric), full-wave rectified
                for c in band.iter_mut() {
                    *c = Complex::new((c.re / n as f64).abs(), 0.0);
                }
                self.forward.process_with_scratch(&mut band, &mut scratch);
                for (c, h) in band.iter_mut().zip(&self.smoother_spectrum) {
                    *c *= h;
                }
                self.inverse.process_with_scratch(&mut band, &mut scratch);
                let mean_square = band.iter().map(|c| c.re * c.re).sum::<f64>() / n as f64;
                *cell = mean_square.sqrt();
            }
            values.push(row);
        }
        Ok(RhythmMatrix { values, subwindow_hop_s: self.hop as f64 / self.sample_rate_hz as f64 })
    }
}

/// Decaying half of a hanning window of length `2 * len`, normalized to unit
/// sum.
fn half_hanning(len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len)
        .map(|j| (PI * j as f64 / (2.0 * len as f64)).cos().powi(2))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// One-shot filterbank analysis of `frame`.
pub fn fm_rhythm(
    frame: &Frame<'_>,
    plan: &BandPlan,
    subwindow_s: f64,
    subwindow_overlap: f64,
) -> Result<RhythmMatrix> {
    FmRhythm::new(plan.clone(), frame.sample_rate_hz, subwindow_s, subwindow_overlap)?.analyze(frame)
}

fn median6(row: &[f64; N_BANDS]) -> f64 {
    let mut sorted = *row;
    sorted.sort_by(f64::total_cmp);
    (sorted[2] + sorted[3]) / 2.0
}

/// Row-wise band median plus the plain local-maximum test (a decrease that
/// follows an earlier non-decreasing step).
pub fn band_median_envelope(matrix: &RhythmMatrix) -> Result<MedianEnvelope> {
    band_median_envelope_with_prominence(matrix, 0.0)
}

/// Like [`band_median_envelope`], but the local maximum must rise and fall by
/// more than `min_prominence * max|c|`.
pub fn band_median_envelope_with_prominence(
    matrix: &RhythmMatrix,
    min_prominence: f64,
) -> Result<MedianEnvelope> {
    if matrix.values.is_empty() {
        return Err(Error::EmptyInput("rhythm matrix has no rows"));
    }
    let values: Vec<f64> = matrix.values.iter().map(median6).collect();
    let rhythmic = has_local_maximum(&values, min_prominence);
    Ok(MedianEnvelope { values, rhythmic })
}

/// True when some `c[j]` has `c[j] - c[i] >= r` for an earlier `i` and
/// `c[j] - c[k] > r` for a later `k`, with `r = min_prominence * max|c|`.
/// With `min_prominence = 0` this is exactly "a decrease after an earlier
/// non-decreasing step".
pub fn has_local_maximum(c: &[f64], min_prominence: f64) -> bool {
    let r = min_prominence * c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut lowest = f64::INFINITY;
    let mut highest_peak = f64::NEG_INFINITY;
    for &v in c {
        if highest_peak - v > r {
            return true;
        }
        if v - lowest >= r {
            highest_peak = highest_peak.max(v);
        }
        lowest = lowest.min(v);
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn oscillator_analytic_values() {
        let s8 = hanning_oscillator(8).unwrap().coefficients;
        for (got, want) in s8.iter().zip([0.5, 0.0, 0.5, 1.0, 0.5, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let s4 = hanning_oscillator(4).unwrap().coefficients;
        for (got, want) in s4.iter().zip([0.0, 1.0, 0.0, 1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(hanning_oscillator(12).unwrap().coefficients[0], 0.75, epsilon = 1e-12);
        assert!(hanning_oscillator(0).is_err());
    }

    #[test]
    fn default_band_plan() {
        let plan = band_plan(200.0, 16_000).unwrap();
        assert_eq!(
            plan.edges_hz,
            [0.0, 200.0, 200.0, 400.0, 400.0, 800.0, 800.0, 1600.0, 1600.0, 3200.0, 3200.0, 8000.0]
        );
        assert_eq!(plan.band_of(0.0), 0);
        assert_eq!(plan.band_of(199.9), 0);
        assert_eq!(plan.band_of(200.0), 1);
        assert_eq!(plan.band_of(300.0), 1);
        assert_eq!(plan.band_of(8000.0), 5);
    }

    #[test]
    fn band_plan_scaling_and_nyquist() {
        let plan = band_plan(100.0, 16_000).unwrap();
        assert_eq!(
            [plan.edges_hz[1], plan.edges_hz[3], plan.edges_hz[5], plan.edges_hz[7], plan.edges_hz[9]],
            [100.0, 200.0, 400.0, 800.0, 1600.0]
        );
        assert!(band_plan(200.0, 6000).is_err());
        assert!(band_plan(0.0, 16_000).is_err());
    }

    fn matrix_from_medians(c: &[f64]) -> RhythmMatrix {
        RhythmMatrix { values: c.iter().map(|&v| [v; N_BANDS]).collect(), subwindow_hop_s: 0.025 }
    }

    #[test]
    fn median_envelope_examples() {
        let single = RhythmMatrix { values: vec![[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]], subwindow_hop_s: 0.025 };
        let env = band_median_envelope(&single).unwrap();
        assert_eq!(env.values, vec![3.5]);
        assert!(!env.rhythmic);

        assert!(band_median_envelope(&matrix_from_medians(&[1.0, 3.0, 2.0])).unwrap().rhythmic);
        assert!(!band_median_envelope(&matrix_from_medians(&[1.0, 2.0, 3.0])).unwrap().rhythmic);
        assert!(!band_median_envelope(&matrix_from_medians(&[3.0, 2.0, 1.0])).unwrap().rhythmic);

        let empty = RhythmMatrix { values: vec![], subwindow_hop_s: 0.025 };
        assert!(band_median_envelope(&empty).is_err());
    }

    #[test]
    fn prominence_filters_shallow_maxima() {
        let ripple = [1.0, 1.0 + 1e-12, 1.0, 1.0 + 1e-12];
        assert!(has_local_maximum(&ripple, 0.0));
        assert!(!has_local_maximum(&ripple, DEFAULT_MIN_PROMINENCE));

        let pulses = [0.1, 1.0, 0.2, 0.9, 0.1];
        assert!(has_local_maximum(&pulses, DEFAULT_MIN_PROMINENCE));
        let shallow = [0.7, 1.0, 0.8, 0.95, 0.7];
        assert!(!has_local_maximum(&shallow, DEFAULT_MIN_PROMINENCE));
        // rise and fall may span several steps
        assert!(has_local_maximum(&[0.0, 0.3, 0.6, 1.0, 0.7, 0.4, 0.2], DEFAULT_MIN_PROMINENCE));
        assert!(!has_local_maximum(&[1.0, 0.5, 0.0], 0.0));
        assert!(!has_local_maximum(&[], 0.0));
    }

    #[test]
    fn zero_frame_gives_zero_matrix_of_expected_shape() {
        let x = vec![0.0; 40_000];
        let frame = Frame { index: 0, start_time_s: 0.0, samples: &x, sample_rate_hz: 16_000 };
        let plan = band_plan(200.0, 16_000).unwrap();
        let m = fm_rhythm(&frame, &plan, 0.05, 0.5).unwrap();
        assert_eq!(m.rows(), 99);
        assert_eq!(m.cols(), 6);
        assert!(m.values.iter().flatten().all(|&v| v == 0.0));
        assert!(!band_median_envelope(&m).unwrap().rhythmic);
    }

    #[test]
    fn subwindow_longer_than_frame_is_rejected() {
        let x = vec![0.0; 400];
        let frame = Frame { index: 0, start_time_s: 0.0, samples: &x, sample_rate_hz: 16_000 };
        let plan = band_plan(200.0, 16_000).unwrap();
        assert!(fm_rhythm(&frame, &plan, 0.05, 0.5).is_err());
        let wrong_rate = band_plan(200.0, 8_000).unwrap();
        assert!(fm_rhythm(&frame, &wrong_rate, 0.01, 0.5).is_err());
    }

    #[test]
    fn half_hanning_is_normalized_and_decaying() {
        let h = half_hanning(800);
        assert_abs_diff_eq!(h.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
    }
}

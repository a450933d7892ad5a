//! Seeded synthetic laughter and control signals with exact ground truth.
//!
//! A laugh bout is a harmonic voiced tone gated by a train of raised-cosine
//! pulses (staccato "ha ha"), shaped by an onset ramp, a flat apex and an
//! offset decay. Scenes place bouts over a background (silence, white noise,
//! a steady tone, or speech-shaped babble) at a stated level above it.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detector::TimeInterval;
use crate::error::{Error, Result};
use crate::evalkit::ReferenceAnnotation;
use crate::signal::{self, AudioSignal, CANONICAL_RATE_HZ};

/// Level used for bouts over silence and for default backgrounds.
pub const REFERENCE_RMS: f64 = 0.05;
/// Fraction of each pulse period during which the voice sounds.
pub const PULSE_DUTY: f64 = 0.6;
const BABBLE_STREAMS: usize = 8;
const SPEECH_SHAPE_CORNER_HZ: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaughSpec {
    pub bout_duration_s: f64,
    pub pulse_rate_hz: f64,
    pub f0_hz: f64,
    pub n_harmonics: usize,
    pub onset_fraction: f64,
    pub apex_fraction: f64,
    pub offset_fraction: f64,
    pub gain_db_over_background: f64,
    pub seed: u64,
}

impl Default for LaughSpec {
    fn default() -> Self {
        Self {
            bout_duration_s: 3.0,
            pulse_rate_hz: 5.0,
            f0_hz: 200.0,
            n_harmonics: 5,
            onset_fraction: 0.15,
            apex_fraction: 0.7,
            offset_fraction: 0.15,
            gain_db_over_background: 6.0,
            seed: 0,
        }
    }
}

impl LaughSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.bout_duration_s > 0.0 && self.bout_duration_s.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "bout duration must be positive, got {}",
                self.bout_duration_s
            )));
        }
        if !(self.pulse_rate_hz > 0.0 && self.pulse_rate_hz.is_finite()) {
            return Err(Error::InvalidSpec(format!("pulse rate must be positive, got {}", self.pulse_rate_hz)));
        }
        if !(self.f0_hz > 0.0 && self.f0_hz.is_finite()) || self.n_harmonics == 0 {
            return Err(Error::InvalidSpec("f0 must be positive with at least one harmonic".into()));
        }
        let fractions = [self.onset_fraction, self.apex_fraction, self.offset_fraction];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f))
            || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidSpec(format!(
                "onset/apex/offset fractions must be non-negative and sum to 1, got {fractions:?}"
            )));
        }
        if !self.gain_db_over_background.is_finite() {
            return Err(Error::InvalidSpec("gain must be finite".into()));
        }
        Ok(())
    }

    /// Notes for parameters outside typical laughter: bouts of 2-8 s with
    /// 4-12 pulses per second.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(2.0..=8.0).contains(&self.bout_duration_s) {
            w.push(format!("bout duration {} s is outside the typical 2-8 s", self.bout_duration_s));
        }
        if !(4.0..=12.0).contains(&self.pulse_rate_hz) {
            w.push(format!("pulse rate {} Hz is outside the typical 4-12 Hz", self.pulse_rate_hz));
        }
        w
    }
}

/// Amplitude of the pulse train at time `t` (seconds into the bout): a
/// raised-cosine bump over the first [`PULSE_DUTY`] of each period.
pub fn pulse_gate(t: f64, pulse_rate_hz: f64) -> f64 {
    let period = 1.0 / pulse_rate_hz;
    let phase = (t / period).fract() / PULSE_DUTY;
    if phase < 1.0 {
        0.5 * (1.0 - (2.0 * PI * phase).cos())
    } else {
        0.0
    }
}

/// Onset ramp, flat apex, offset decay.
pub fn bout_envelope(t: f64, spec: &LaughSpec) -> f64 {
    let d = spec.bout_duration_s;
    let onset_end = spec.onset_fraction * d;
    let offset_start = (spec.onset_fraction + spec.apex_fraction) * d;
    if t < onset_end {
        0.3 + 0.7 * t / onset_end
    } else if t < offset_start {
        1.0
    } else {
        let x = ((t - offset_start) / (d - offset_start).max(f64::EPSILON)).min(1.0);
        (-3.0 * x).exp()
    }
}

/// A single laugh bout normalized to unit RMS.
pub fn synth_laugh_bout(spec: &LaughSpec, sample_rate_hz: u32) -> Result<AudioSignal> {
    spec.validate()?;
    let fs = sample_rate_hz as f64;
    let top = spec.f0_hz * spec.n_harmonics as f64;
    if top >= fs / 2.0 {
        return Err(Error::InvalidSpec(format!(
            "harmonic {} at {top} Hz is not below the {} Hz Nyquist frequency",
            spec.n_harmonics,
            fs / 2.0
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phases: Vec<f64> = (0..spec.n_harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let n_pulses = (spec.bout_duration_s * spec.pulse_rate_hz).ceil() as usize + 1;
    // per-pulse loudness and pitch jitter
    let pulse_gain: Vec<f64> = (0..n_pulses).map(|_| rng.random_range(0.85..1.15)).collect();
    let pulse_pitch: Vec<f64> = (0..n_pulses).map(|_| rng.random_range(0.97..1.03)).collect();

    let n = (spec.bout_duration_s * fs).round() as usize;
    let mut phase = 0.0;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let pulse = ((t * spec.pulse_rate_hz) as usize).min(n_pulses - 1);
        let f0 = spec.f0_hz * pulse_pitch[pulse];
        phase += 2.0 * PI * f0 / fs;
        let voiced: f64 = phases
            .iter()
            .enumerate()
            .map(|(h, p)| ((h + 1) as f64 * phase + p).sin() / (h + 1) as f64)
            .sum();
        samples.push(voiced * pulse_gate(t, spec.pulse_rate_hz) * pulse_gain[pulse] * bout_envelope(t, spec));
    }
    let rms = rms(&samples);
    if rms > 0.0 {
        samples.iter_mut().for_each(|s| *s /= rms);
    }
    AudioSignal::new(samples, sample_rate_hz)
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Background {
    Silence,
    WhiteNoise { variance: f64 },
    /// Steady sinusoid.
    Tone { freq_hz: f64, rms: f64 },
    /// Sum of independently seeded speech-shaped noise streams.
    Babble { seed: u64, rms: f64 },
}

/// Speech-shaped noise: white Gaussian noise through a one-pole low-pass at
/// 500 Hz, i.e. a -6 dB/octave slope above the corner.
pub fn speech_shaped_noise(n: usize, sample_rate_hz: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (-2.0 * PI * SPEECH_SHAPE_CORNER_HZ / sample_rate_hz as f64).exp();
    let mut y = 0.0;
    (0..n)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            y = (1.0 - a) * w + a * y;
            y
        })
        .collect()
}

pub fn babble(n: usize, sample_rate_hz: u32, seed: u64, target_rms: f64) -> Vec<f64> {
    let mut mix = vec![0.0; n];
    for stream in 0..BABBLE_STREAMS as u64 {
        let s = speech_shaped_noise(n, sample_rate_hz, seed.wrapping_mul(1_000_003).wrapping_add(stream));
        mix.iter_mut().zip(s).for_each(|(m, v)| *m += v);
    }
    scale_to_rms(&mut mix, target_rms);
    mix
}

fn scale_to_rms(x: &mut [f64], target: f64) {
    let r = rms(x);
    if r > 0.0 {
        x.iter_mut().for_each(|v| *v *= target / r);
    }
}

impl Background {
    pub fn render(&self, n: usize, sample_rate_hz: u32, seed: u64) -> Result<Vec<f64>> {
        Ok(match *self {
            Background::Silence => vec![0.0; n],
            Background::WhiteNoise { variance } => {
                if !(variance >= 0.0 && variance.is_finite()) {
                    return Err(Error::InvalidSpec(format!("noise variance must be non-negative, got {variance}")));
                }
                let sd = variance.sqrt();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
            }
            Background::Tone { freq_hz, rms } => {
                if !(freq_hz > 0.0 && freq_hz < sample_rate_hz as f64 / 2.0) {
                    return Err(Error::InvalidSpec(format!("tone frequency {freq_hz} Hz out of range")));
                }
                let amp = rms * 2f64.sqrt();
                (0..n)
                    .map(|i| amp * (2.0 * PI * freq_hz * i as f64 / sample_rate_hz as f64).sin())
                    .collect()
            }
            Background::Babble { seed, rms } => babble(n, sample_rate_hz, seed, rms),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoutPlacement {
    pub start_s: f64,
    #[serde(default)]
    pub spec: LaughSpec,
}

/// A full synthetic recording description; also the `synth --spec` file
/// format (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub total_s: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: u32,
    #[serde(default = "default_background")]
    pub background: Background,
    #[serde(default)]
    pub bouts: Vec<BoutPlacement>,
    /// Seed for the white-noise background.
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> u32 {
    CANONICAL_RATE_HZ
}

fn default_background() -> Background {
    Background::Silence
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClip {
    pub signal: AudioSignal,
    pub truth: ReferenceAnnotation,
    pub fingerprint: String,
}

/// Renders `bouts` over `background`. Each bout is scaled so the RMS of its
/// region exceeds the background RMS there by the bout's gain.
pub fn synth_scene(scene: &SceneSpec) -> Result<SyntheticClip> {
    let fs = scene.sample_rate_hz;
    if fs == 0 {
        return Err(Error::InvalidSpec("sample rate must be positive".into()));
    }
    if !(scene.total_s > 0.0 && scene.total_s.is_finite()) {
        return Err(Error::InvalidSpec(format!("clip length must be positive, got {}", scene.total_s)));
    }
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(scene.bouts.len());
    for b in &scene.bouts {
        b.spec.validate()?;
        let end = b.start_s + b.spec.bout_duration_s;
        if b.start_s < 0.0 || end > scene.total_s + 1e-9 {
            return Err(Error::BoutOutsideClip { start_s: b.start_s, end_s: end, total_s: scene.total_s });
        }
        spans.push((b.start_s, end));
    }
    let mut order: Vec<(f64, f64)> = spans.clone();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in order.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(Error::OverlappingBouts(w[0].0, w[0].1, w[1].0, w[1].1));
        }
    }

    let n = (scene.total_s * fs as f64).round() as usize;
    let mut samples = scene.background.render(n, fs, scene.seed)?;
    let silent_background = rms(&samples) == 0.0;
    let mut truth = Vec::with_capacity(scene.bouts.len());
    for b in &scene.bouts {
        let bout = synth_laugh_bout(&b.spec, fs)?.into_samples();
        let start = (b.start_s * fs as f64).round() as usize;
        let end = (start + bout.len()).min(n);
        let region_rms = rms(&samples[start..end]);
        let gain_power = 10f64.powf(b.spec.gain_db_over_background / 10.0);
        let amplitude = if silent_background || region_rms == 0.0 {
            REFERENCE_RMS * gain_power.sqrt()
        } else {
            if gain_power <= 1.0 {
                return Err(Error::InvalidSpec(format!(
                    "gain {} dB cannot raise a non-silent background",
                    b.spec.gain_db_over_background
                )));
            }
            region_rms * (gain_power - 1.0).sqrt()
        };
        for (dst, src) in samples[start..end].iter_mut().zip(&bout) {
            *dst += amplitude * src;
        }
        truth.push(TimeInterval::new(b.start_s, b.start_s + b.spec.bout_duration_s)?);
    }
    let fingerprint = fingerprint(scene);
    Ok(SyntheticClip {
        signal: AudioSignal::new(samples, fs)?,
        truth: ReferenceAnnotation::new(truth, fingerprint.clone()),
        fingerprint,
    })
}

/// FNV-1a hash of the scene's JSON form.
fn fingerprint(scene: &SceneSpec) -> String {
    let json = serde_json::to_string(scene).expect("scene serializes");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in json.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// What a corpus clip contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    Laugh,
    WhiteNoise,
    Tone,
    Silence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub kind: ClipKind,
    pub scene: SceneSpec,
}

pub const CORPUS_CLIP_S: f64 = 10.0;

/// Seeded evaluation corpus: `n_laugh` clips with one default bout in babble
/// at +6 dB, then `n_controls` clips cycling white noise, steady tone and
/// silence. All clips are 10 s at 16 kHz.
pub fn standard_corpus(seed: u64, n_laugh: usize, n_controls: usize) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_laugh + n_controls);
    for i in 0..n_laugh {
        let spec = LaughSpec { seed: rng.random(), ..LaughSpec::default() };
        let latest = CORPUS_CLIP_S - spec.bout_duration_s - 1.0;
        // 10 ms grid keeps truth aligned with the evaluation ticks
        let start_s = (rng.random_range(1.0..latest) * 100.0).round() / 100.0;
        out.push(CorpusEntry {
            name: format!("laugh_{i:03}"),
            kind: ClipKind::Laugh,
            scene: SceneSpec {
                total_s: CORPUS_CLIP_S,
                sample_rate_hz: CANONICAL_RATE_HZ,
                background: Background::Babble { seed: rng.random(), rms: REFERENCE_RMS },
                bouts: vec![BoutPlacement { start_s, spec }],
                seed: rng.random(),
            },
        });
    }
    for i in 0..n_controls {
        let (kind, background) = match i % 3 {
            0 => (ClipKind::WhiteNoise, Background::WhiteNoise { variance: REFERENCE_RMS * REFERENCE_RMS }),
            1 => (
                ClipKind::Tone,
                Background::Tone { freq_hz: rng.random_range(150.0..1000.0), rms: REFERENCE_RMS },
            ),
            _ => (ClipKind::Silence, Background::Silence),
        };
        let name = match kind {
            ClipKind::WhiteNoise => format!("noise_{i:03}"),
            ClipKind::Tone => format!("tone_{i:03}"),
            _ => format!("silence_{i:03}"),
        };
        out.push(CorpusEntry {
            name,
            kind,
            scene: SceneSpec {
                total_s: CORPUS_CLIP_S,
                sample_rate_hz: CANONICAL_RATE_HZ,
                background,
                bouts: Vec::new(),
                seed: rng.random(),
            },
        });
    }
    out
}

/// One long labeled recording for threshold tuning: `n_bouts` default bouts
/// in babble at +6 dB, separated by 4-10 s gaps.
pub fn dev_split(seed: u64, n_bouts: usize) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bouts = Vec::with_capacity(n_bouts);
    let mut cursor: f64 = rng.random_range(2.0..8.0);
    for _ in 0..n_bouts {
        let start_s = (cursor * 100.0).round() / 100.0;
        let spec = LaughSpec { seed: rng.random(), ..LaughSpec::default() };
        cursor = start_s + spec.bout_duration_s + rng.random_range(4.0..10.0);
        bouts.push(BoutPlacement { start_s, spec });
    }
    SceneSpec {
        total_s: cursor.ceil(),
        sample_rate_hz: CANONICAL_RATE_HZ,
        background: Background::Babble { seed: rng.random(), rms: REFERENCE_RMS },
        bouts,
        seed: rng.random(),
    }
}

/// Writes `<stem>.wav` and `<stem>.csv` (ground truth) next to each other.
pub fn write_clip(wav_path: impl AsRef<Path>, clip: &SyntheticClip) -> Result<PathBuf> {
    let wav_path = wav_path.as_ref();
    signal::write_wav(wav_path, &clip.signal)?;
    let truth_path = wav_path.with_extension("csv");
    std::fs::write(&truth_path, clip.truth.to_csv())?;
    Ok(truth_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bout_length_and_determinism() {
        let spec = LaughSpec::default();
        let a = synth_laugh_bout(&spec, 16_000).unwrap();
        let b = synth_laugh_bout(&spec, 16_000).unwrap();
        assert_eq!(a.len(), 48_000);
        assert_eq!(a, b);
        let other = synth_laugh_bout(&LaughSpec { seed: 1, ..spec }, 16_000).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let zero = LaughSpec { bout_duration_s: 0.0, ..Default::default() };
        assert!(matches!(synth_laugh_bout(&zero, 16_000), Err(Error::InvalidSpec(_))));
        let fractions = LaughSpec { apex_fraction: 0.5, ..Default::default() };
        assert!(fractions.validate().is_err());
        let nyquist = LaughSpec { f0_hz: 900.0, n_harmonics: 5, ..Default::default() };
        assert!(synth_laugh_bout(&nyquist, 8_000).is_err());
    }

    #[test]
    fn warnings_flag_atypical_laughter() {
        assert!(LaughSpec::default().warnings().is_empty());
        let odd = LaughSpec { bout_duration_s: 10.0, pulse_rate_hz: 2.0, ..Default::default() };
        assert_eq!(odd.warnings().len(), 2);
    }

    #[test]
    fn scene_truth_and_errors() {
        let one = SceneSpec {
            total_s: 10.0,
            sample_rate_hz: 16_000,
            background: Background::Babble { seed: 1, rms: 0.05 },
            bouts: vec![BoutPlacement { start_s: 4.0, spec: LaughSpec::default() }],
            seed: 0,
        };
        let clip = synth_scene(&one).unwrap();
        assert_eq!(clip.truth.intervals, vec![TimeInterval { start_s: 4.0, end_s: 7.0 }]);
        assert_eq!(clip.signal.len(), 160_000);

        let quiet = SceneSpec { bouts: vec![], background: Background::WhiteNoise { variance: 1.0 }, ..one.clone() };
        assert!(synth_scene(&quiet).unwrap().truth.intervals.is_empty());

        let spec2 = LaughSpec { bout_duration_s: 2.0, ..Default::default() };
        let overlapping = SceneSpec {
            bouts: vec![
                BoutPlacement { start_s: 1.0, spec: spec2.clone() },
                BoutPlacement { start_s: 2.0, spec: spec2.clone() },
            ],
            ..one.clone()
        };
        assert!(matches!(synth_scene(&overlapping), Err(Error::OverlappingBouts(..))));
        let outside = SceneSpec { bouts: vec![BoutPlacement { start_s: 9.0, spec: spec2 }], ..one };
        assert!(matches!(synth_scene(&outside), Err(Error::BoutOutsideClip { .. })));
    }

    #[test]
    fn corpus_layout() {
        let corpus = standard_corpus(7, 30, 20);
        assert_eq!(corpus.len(), 50);
        assert_eq!(corpus.iter().filter(|c| c.kind == ClipKind::Laugh).count(), 30);
        assert_eq!(corpus.iter().filter(|c| c.kind == ClipKind::Silence).count(), 6);
        assert_eq!(standard_corpus(7, 30, 20), corpus);
    }

    #[test]
    fn dev_split_bouts_fit() {
        let scene = dev_split(3, 8);
        let clip = synth_scene(&scene).unwrap();
        assert_eq!(clip.truth.intervals.len(), 8);
        assert!(clip.truth.intervals.windows(2).all(|w| w[1].start_s - w[0].end_s >= 4.0 - 0.01));
    }

    #[test]
    fn scene_spec_toml() {
        let text = r#"
            total_s = 10.0
            background = { kind = "babble", seed = 3, rms = 0.05 }

            [[bouts]]
            start_s = 4.0
            spec = { bout_duration_s = 3.0, pulse_rate_hz = 5.0 }
        "#;
        let scene: SceneSpec = toml::from_str(text).unwrap();
        assert_eq!(scene.sample_rate_hz, 16_000);
        assert_eq!(scene.bouts[0].spec.f0_hz, 200.0);
        assert!(toml::from_str::<SceneSpec>("total_s = 1.0\nbogus = 2\n").is_err());
    }
}

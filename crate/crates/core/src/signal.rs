//! Audio ingestion and short-time framing.
//!
//! Audio is held as mono `f64` samples in [-1, 1]. Framing follows the
//! detector's analysis protocol: 2.5 s frames with 50 % overlap, trailing
//! partial frames dropped.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

/// Rate the detector works at. Anything else is resampled on load.
pub const CANONICAL_RATE_HZ: u32 = 16_000;

pub const DEFAULT_FRAME_SIZE_S: f64 = 2.5;
pub const DEFAULT_OVERLAP: f64 = 0.5;

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// One analysis frame: a borrowed window into an [`AudioSignal`].
#[derive(Debug, Clone, Copy)]
pub struct Frame<'a> {
    pub index: usize,
    pub start_time_s: f64,
    pub samples: &'a [f64],
    pub sample_rate_hz: u32,
}

impl Frame<'_> {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Fixed-size overlapping frames over a signal.
#[derive(Debug, Clone)]
pub struct FrameSequence<'a> {
    signal: &'a AudioSignal,
    frame_len: usize,
    hop: usize,
    count: usize,
    frame_size_s: f64,
    frame_shift_s: f64,
}

impl<'a> FrameSequence<'a> {
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn frame_size_s(&self) -> f64 {
        self.frame_size_s
    }

    pub fn frame_shift_s(&self) -> f64 {
        self.frame_shift_s
    }

    pub fn signal(&self) -> &'a AudioSignal {
        self.signal
    }

    pub fn get(&self, index: usize) -> Option<Frame<'a>> {
        if index >= self.count {
            return None;
        }
        let start = index * self.hop;
        Some(Frame {
            index,
            start_time_s: index as f64 * self.frame_shift_s,
            samples: &self.signal.samples[start..start + self.frame_len],
            sample_rate_hz: self.signal.sample_rate_hz,
        })
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Frame<'a>> + '_ {
        (0..self.count).map(move |i| self.get(i).expect("index below count"))
    }
}

/// Splits `signal` into frames of `frame_size_s` seconds overlapping by
/// `overlap_fraction`. A signal shorter than one frame yields an empty
/// sequence.
pub fn frame_signal(
    signal: &AudioSignal,
    frame_size_s: f64,
    overlap_fraction: f64,
) -> Result<FrameSequence<'_>> {
    if !(frame_size_s > 0.0 && frame_size_s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "frame size must be positive, got {frame_size_s}"
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::InvalidParameter(format!(
            "overlap must lie in [0, 1), got {overlap_fraction}"
        )));
    }
    if signal.is_empty() {
        return Err(Error::EmptyInput("signal has no samples"));
    }
    let rate = signal.sample_rate_hz as f64;
    let frame_len = (frame_size_s * rate).round() as usize;
    let hop = ((frame_size_s * (1.0 - overlap_fraction) * rate).round() as usize).max(1);
    if frame_len == 0 {
        return Err(Error::InvalidParameter("frame shorter than one sample".into()));
    }
    let count = if signal.len() >= frame_len {
        (signal.len() - frame_len) / hop + 1
    } else {
        0
    };
    Ok(FrameSequence {
        signal,
        frame_len,
        hop,
        count,
        frame_size_s: frame_len as f64 / rate,
        frame_shift_s: hop as f64 / rate,
    })
}

/// Reads a RIFF/WAVE file (integer PCM or 32-bit float, one or two
/// channels) into a mono signal at the file's own rate.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::UnsupportedEncoding {
            path: path.to_owned(),
            detail: format!("{} channels (expected 1 or 2)", spec.channels),
        });
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            if !(8..=32).contains(&spec.bits_per_sample) {
                return Err(Error::UnsupportedEncoding {
                    path: path.to_owned(),
                    detail: format!("{}-bit integer PCM", spec.bits_per_sample),
                });
            }
            let full_scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedEncoding {
                    path: path.to_owned(),
                    detail: format!("{}-bit float", spec.bits_per_sample),
                });
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(|v| v as f64))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_error(path, e))?
        }
    };
    let channels = spec.channels as usize;
    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|c| c.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    AudioSignal::new(mono, spec.sample_rate)
}

/// Loads a WAV file and resamples it to [`CANONICAL_RATE_HZ`].
pub fn load_canonical(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let signal = load_audio(path)?;
    resample(&signal, CANONICAL_RATE_HZ)
}

fn wav_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Error::NotFound(path.to_owned())
        }
        // hound reports short reads as `Other`
        hound::Error::IoError(e)
            if matches!(
                e.kind(),
                std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::InvalidData | std::io::ErrorKind::Other
            ) =>
        {
            Error::CorruptHeader { path: path.to_owned(), detail: e.to_string() }
        }
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path: path.to_owned(),
            detail: "codec is neither integer PCM nor IEEE float".into(),
        },
        other => Error::CorruptHeader { path: path.to_owned(), detail: other.to_string() },
    }
}

/// Writes a mono signal as 32-bit float WAV.
pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let path = path.as_ref();
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for &s in &signal.samples {
        writer.write_sample(s as f32).map_err(|e| wav_error(path, e))?;
    }
    writer.finalize().map_err(|e| wav_error(path, e))
}

// Zero crossings of the interpolation kernel on each side.
const SINC_ZERO_CROSSINGS: f64 = 32.0;
const KAISER_BETA: f64 = 9.0;
// Kernel cutoff as a fraction of the lower Nyquist frequency.
const CUTOFF_MARGIN: f64 = 0.95;

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
///
/// The output holds `round(len * target / source)` samples. Samples within
/// one kernel half-width of either end see a truncated kernel.
pub fn resample(signal: &AudioSignal, target_hz: u32) -> Result<AudioSignal> {
    if target_hz == 0 {
        return Err(Error::InvalidParameter("target rate must be positive".into()));
    }
    let source_hz = signal.sample_rate_hz;
    if source_hz == target_hz {
        return Ok(signal.clone());
    }
    let ratio = target_hz as f64 / source_hz as f64;
    let cutoff = CUTOFF_MARGIN * ratio.min(1.0);
    let half_width = (SINC_ZERO_CROSSINGS / cutoff).ceil() as i64;
    let input = &signal.samples;
    let n_in = input.len() as i64;
    let n_out = (input.len() as f64 * ratio).round() as usize;
    let i0_beta = bessel_i0(KAISER_BETA);

    let output = (0..n_out)
        .map(|m| {
            let pos = m as f64 / ratio;
            let center = pos.floor() as i64;
            let lo = (center - half_width + 1).max(0);
            let hi = (center + half_width).min(n_in - 1);
            let mut acc = 0.0;
            for n in lo..=hi {
                let d = pos - n as f64;
                let r = d / half_width as f64;
                if r.abs() >= 1.0 {
                    continue;
                }
                let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta;
                acc += input[n as usize] * cutoff * sinc(cutoff * d) * window;
            }
            acc
        })
        .collect();
    AudioSignal::new(output, target_hz)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(len: usize, rate: u32) -> AudioSignal {
        AudioSignal::new(vec![0.25; len], rate).unwrap()
    }

    #[test]
    fn rejects_zero_rate_and_nan() {
        assert!(AudioSignal::new(vec![0.0], 0).is_err());
        assert!(matches!(
            AudioSignal::new(vec![0.0, f64::NAN], 16_000),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn ten_seconds_gives_seven_frames() {
        let s = constant(160_000, 16_000);
        let frames = frame_signal(&s, 2.5, 0.5).unwrap();
        assert_eq!(frames.count(), 7);
        let starts: Vec<f64> = frames.iter().map(|f| f.start_time_s).collect();
        assert_eq!(starts, vec![0.0, 1.25, 2.5, 3.75, 5.0, 6.25, 7.5]);
        assert!(frames.iter().all(|f| f.samples.len() == 40_000));
    }

    #[test]
    fn exact_and_short_signals() {
        let exact = constant(40_000, 16_000);
        assert_eq!(frame_signal(&exact, 2.5, 0.5).unwrap().count(), 1);
        let short = constant(38_400, 16_000);
        assert!(frame_signal(&short, 2.5, 0.5).unwrap().is_empty());
    }

    #[test]
    fn framing_rejects_bad_parameters() {
        let s = constant(100, 16_000);
        assert!(frame_signal(&s, 0.0, 0.5).is_err());
        assert!(frame_signal(&s, 1.0, 1.0).is_err());
        assert!(frame_signal(&s, 1.0, -0.1).is_err());
        let empty = AudioSignal::new(vec![], 16_000).unwrap();
        assert!(matches!(frame_signal(&empty, 1.0, 0.5), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn resample_identity_is_bit_identical() {
        let s = AudioSignal::new((0..1000).map(|i| (i as f64 * 0.01).sin()).collect(), 16_000)
            .unwrap();
        assert_eq!(resample(&s, 16_000).unwrap(), s);
        assert!(resample(&s, 0).is_err());
    }

    #[test]
    fn resample_halves_length() {
        let s = constant(32_000, 32_000);
        let r = resample(&s, 16_000).unwrap();
        assert_eq!(r.len(), 16_000);
        assert_eq!(r.sample_rate_hz(), 16_000);
    }

    #[test]
    fn resampled_sinusoid_matches_analytic_target() {
        let src = 48_000u32;
        let dst = 16_000u32;
        let tone = |t: f64| (2.0 * PI * 100.0 * t).sin();
        let s = AudioSignal::new((0..src).map(|i| tone(i as f64 / src as f64)).collect(), src)
            .unwrap();
        let r = resample(&s, dst).unwrap();
        assert_eq!(r.len(), dst as usize);
        // skip samples whose kernel is truncated by the signal edges
        let margin = (SINC_ZERO_CROSSINGS / (CUTOFF_MARGIN / 3.0)).ceil() as usize / 3 + 1;
        let worst = r.samples()[margin..r.len() - margin]
            .iter()
            .enumerate()
            .map(|(i, &y)| (y - tone((i + margin) as f64 / dst as f64)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "worst error {worst}");
    }

    #[test]
    fn bessel_i0_reference_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-12);
        assert!((bessel_i0(9.0) - 1_093.588_354_511_374_5).abs() < 1e-8);
    }
}

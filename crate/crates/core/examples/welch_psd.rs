//! Welch PSD and frame power of one 2.5 s frame holding a 1 kHz tone in
//! light noise.
//!
//! cargo run --example welch_psd

use std::f64::consts::PI;

use staccato::signal::{frame_signal, AudioSignal};
use staccato::spectral::{frame_power, welch_psd, DEFAULT_SEGMENT_LEN, DEFAULT_SEGMENT_OVERLAP};
use staccato::synthlab::speech_shaped_noise;

fn main() -> staccato::Result<()> {
    let fs = 16_000;
    let noise = speech_shaped_noise(40_000, fs, 1);
    let x: Vec<f64> = noise
        .iter()
        .enumerate()
        .map(|(i, n)| 0.1 * (2.0 * PI * 1000.0 * i as f64 / fs as f64).sin() + 0.01 * n)
        .collect();
    let mean_square = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let signal = AudioSignal::new(x, fs)?;
    let frames = frame_signal(&signal, 2.5, 0.5)?;
    let frame = frames.get(0).expect("one full frame");
    let psd = welch_psd(&frame, DEFAULT_SEGMENT_LEN, DEFAULT_SEGMENT_OVERLAP)?;
    println!("bins {} of {:.2} Hz", psd.values.len(), psd.bin_width_hz);
    println!("peak at {:.1} Hz", psd.peak_bin() as f64 * psd.bin_width_hz);
    println!("integrated power {:.6e}, mean square {:.6e}", psd.total_power(), mean_square);
    println!("frame power {:.2} dB", frame_power(&psd).power_db);
    Ok(())
}

//! Filterbank rhythm matrix and band-median envelope of a laugh bout versus
//! a steady tone.
//!
//! cargo run --example rhythm_envelope

use std::f64::consts::PI;

use staccato::rhythm::{band_median_envelope_with_prominence, band_plan, fm_rhythm, DEFAULT_MIN_PROMINENCE};
use staccato::signal::{frame_signal, AudioSignal};
use staccato::synthlab::{synth_laugh_bout, LaughSpec};

fn describe(name: &str, signal: &AudioSignal) -> staccato::Result<()> {
    let plan = band_plan(200.0, signal.sample_rate_hz())?;
    let frames = frame_signal(signal, 2.5, 0.5)?;
    let frame = frames.get(0).expect("one full frame");
    let matrix = fm_rhythm(&frame, &plan, 0.05, 0.5)?;
    let env = band_median_envelope_with_prominence(&matrix, DEFAULT_MIN_PROMINENCE)?;
    let shown: Vec<String> = env.values.iter().step_by(8).map(|v| format!("{v:.3}")).collect();
    println!("{name}: {} rows x {} bands, rhythmic {}", matrix.rows(), matrix.cols(), env.rhythmic);
    println!("  envelope every 200 ms: {}", shown.join(" "));
    Ok(())
}

fn main() -> staccato::Result<()> {
    let fs = 16_000;
    let plan = band_plan(200.0, fs)?;
    for i in 0..6 {
        let (lo, hi) = plan.band(i);
        println!("band {} [{lo:.0}, {hi:.0}) Hz", i + 1);
    }
    describe("laugh", &synth_laugh_bout(&LaughSpec::default(), fs)?)?;
    let tone = (0..48_000).map(|i| 0.1 * (2.0 * PI * 300.0 * i as f64 / fs as f64).sin()).collect();
    describe("tone", &AudioSignal::new(tone, fs)?)?;
    Ok(())
}

//! Loads a WAV file and prints detected intervals with the pipeline's
//! intermediate counts. Without an argument a synthetic clip is used.
//!
//! cargo run --example detect_file -- path/to/audio.wav

use staccato::detector::{format_tsv, Detector, PipelineConfig};
use staccato::signal::load_canonical;
use staccato::synthlab::{dev_split, synth_scene};

fn main() -> staccato::Result<()> {
    let signal = match std::env::args().nth(1) {
        Some(path) => load_canonical(path)?,
        None => synth_scene(&dev_split(3, 3))?.signal,
    };
    let report = Detector::new(PipelineConfig::default())?.analyze(&signal, false)?;
    println!("{:.1} s, {} frames", signal.duration_s(), report.frame_count);
    if let Some(t) = report.gate_threshold_db {
        println!("power gate {t:.2} dB keeps {} frames", report.gated.len());
    }
    println!("{} rhythmic candidates", report.candidates.len());
    if let Some(t) = report.selection_threshold {
        println!("selection threshold {t:.5}, {} frames selected", report.selected.len());
    }
    print!("{}", format_tsv(&report.intervals));
    Ok(())
}

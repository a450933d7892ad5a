//! Compares the Otsu gate with the F1-optimal power threshold on a labeled
//! synthetic recording.
//!
//! cargo run --release --example tune_roc

use staccato::detector::PipelineConfig;
use staccato::evalkit::threshold_study;
use staccato::synthlab::{dev_split, synth_scene};

fn main() -> staccato::Result<()> {
    let clip = synth_scene(&dev_split(7, 10))?;
    let study = threshold_study(&clip.signal, &clip.truth, &PipelineConfig::default())?;
    let positives = study.labels.iter().filter(|&&l| l).count();
    println!("{} frames, {positives} labeled laughter", study.labels.len());
    println!("otsu      {:>8.3} dB  F1 {:.3}  AUC {:.3}", study.otsu_threshold_db, study.otsu_f1, study.otsu_curve.auc);
    println!("optimized {:>8.3} dB  F1 {:.3}  AUC {:.3}", study.optimized.threshold, study.optimized.f1, study.optimized.curve.auc);
    Ok(())
}

//! Runs the detector over the seeded synthetic corpus and prints per-clip
//! detections and the pooled tick-level score.
//!
//! cargo run --release --example synthetic_corpus

use staccato::detector::{Detector, PipelineConfig};
use staccato::evalkit::{score_counts, Confusion, DEFAULT_EVAL_HOP_S};
use staccato::synthlab::{standard_corpus, synth_scene, ClipKind};

fn main() -> staccato::Result<()> {
    let detector = Detector::new(PipelineConfig::default())?;
    let mut pooled = Confusion::default();
    for entry in standard_corpus(2024, 30, 20) {
        let clip = synth_scene(&entry.scene)?;
        let report = detector.analyze(&clip.signal, false)?;
        let found: Vec<String> =
            report.intervals.iter().map(|iv| format!("[{:.2}, {:.2}]", iv.start_s, iv.end_s)).collect();
        let truth: Vec<String> =
            clip.truth.intervals.iter().map(|iv| format!("[{:.2}, {:.2}]", iv.start_s, iv.end_s)).collect();
        println!(
            "{:<12} gated {:>2}/{:<2} candidates {:>2}  truth {:<16} found {}",
            entry.name,
            report.gated.len(),
            report.frame_count,
            report.candidates.len(),
            truth.join(" "),
            found.join(" ")
        );
        if entry.kind == ClipKind::Laugh {
            let c = score_counts(&report.intervals, &clip.truth, clip.signal.duration_s(), DEFAULT_EVAL_HOP_S)?;
            pooled.merge(&c);
        }
    }
    println!(
        "laugh clips: precision {:.3} recall {:.3} F1 {:.3}",
        pooled.precision(),
        pooled.recall(),
        pooled.f1()
    );
    Ok(())
}

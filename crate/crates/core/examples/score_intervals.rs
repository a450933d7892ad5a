//! Tick-level precision, recall and F1 of a hypothesis against a reference.
//!
//! cargo run --example score_intervals

use staccato::detector::TimeInterval;
use staccato::evalkit::{score, ReferenceAnnotation, DEFAULT_EVAL_HOP_S};

fn main() -> staccato::Result<()> {
    let reference = ReferenceAnnotation::new(vec![TimeInterval::new(4.0, 7.0)?, TimeInterval::new(12.0, 15.5)?], "example");
    let hypothesis = vec![TimeInterval::new(3.75, 6.25)?, TimeInterval::new(12.5, 16.25)?, TimeInterval::new(18.0, 19.0)?];
    let report = score(&hypothesis, &reference, 20.0, DEFAULT_EVAL_HOP_S)?;
    print!("{}", report.to_text());
    Ok(())
}

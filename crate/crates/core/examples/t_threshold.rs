//! Student-t bounds over candidate standard deviations and the resulting
//! selection threshold.
//!
//! cargo run --example t_threshold

use staccato::detector::{laughter_threshold, t_confidence, t_critical};

fn main() -> staccato::Result<()> {
    for n in [2usize, 5, 10, 30] {
        println!("t(0.95, {:>2} dof) = {:.4}", n - 1, t_critical(0.95, (n - 1) as f64)?);
    }
    let sigmas = [0.051, 0.048, 0.093, 0.055, 0.101, 0.049, 0.052];
    let b = t_confidence(&sigmas, 0.95)?;
    let threshold = laughter_threshold(&b);
    println!("mean {:.4} sd {:.4} bounds [{:.4}, {:.4}]", b.sample_mean, b.sample_sd, b.lower, b.upper);
    println!("threshold {threshold:.4}");
    for (i, s) in sigmas.iter().enumerate() {
        println!("candidate {i} sigma {s:.3} {}", if *s >= threshold { "selected" } else { "" });
    }
    Ok(())
}

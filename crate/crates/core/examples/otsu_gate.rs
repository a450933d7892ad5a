//! Otsu split of a two-level set of frame powers and the frames it keeps.
//!
//! cargo run --example otsu_gate

use staccato::spectral::otsu_threshold;

fn main() -> staccato::Result<()> {
    let powers = [-72.0, -70.5, -71.2, -69.8, -58.3, -57.9, -71.0, -56.4, -70.2, -59.1];
    let otsu = otsu_threshold(&powers)?;
    println!("range [{:.1}, {:.1}] dB, split bin {}, threshold {:.3} dB", otsu.min, otsu.max, otsu.split, otsu.threshold);
    for (i, &p) in powers.iter().enumerate() {
        println!("frame {i:>2} {p:>7.1} dB  bin {:>3}  {}", otsu.bin_of(p), if otsu.passes(p) { "kept" } else { "gated" });
    }
    Ok(())
}

//! Renders a scene from TOML and writes the clip with its truth CSV.
//!
//! cargo run --example synth_scene -- out.wav

use staccato::synthlab::{synth_scene, write_clip, SceneSpec};

const SCENE: &str = r#"
total_s = 12.0
background = { kind = "babble", seed = 5, rms = 0.05 }

[[bouts]]
start_s = 2.0
spec = { bout_duration_s = 4.0, pulse_rate_hz = 4.5, seed = 1 }

[[bouts]]
start_s = 7.5
spec = { bout_duration_s = 3.0, f0_hz = 260.0, gain_db_over_background = 9.0, seed = 2 }
"#;

fn main() -> staccato::Result<()> {
    let spec: SceneSpec = toml::from_str(SCENE).map_err(|e| staccato::Error::Config(e.to_string()))?;
    for bout in &spec.bouts {
        for w in bout.spec.warnings() {
            eprintln!("warning: {w}");
        }
    }
    let clip = synth_scene(&spec)?;
    println!("{:.1} s at {} Hz, fingerprint {}", clip.signal.duration_s(), clip.signal.sample_rate_hz(), clip.fingerprint);
    print!("{}", clip.truth.to_csv());
    if let Some(out) = std::env::args().nth(1) {
        let truth = write_clip(&out, &clip)?;
        println!("wrote {out} and {}", truth.display());
    }
    Ok(())
}

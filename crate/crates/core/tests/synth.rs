use proptest::prelude::*;

use staccato::synthlab::{
    rms, synth_laugh_bout, synth_scene, Background, BoutPlacement, LaughSpec, SceneSpec,
};
use staccato::Error;

/// Peaks of a 20 ms moving-RMS envelope that dominate a +-80 ms
/// neighbourhood and exceed a tenth of the global peak.
fn envelope_peaks(x: &[f64], fs: usize) -> usize {
    let w = fs / 50;
    let env: Vec<f64> = x.windows(w).step_by(fs / 1000).map(rms).collect();
    let global = env.iter().copied().fold(0.0, f64::max);
    let reach = 80;
    (0..env.len())
        .filter(|&i| {
            let lo = i.saturating_sub(reach);
            let hi = (i + reach + 1).min(env.len());
            env[i] > 0.1 * global && env[lo..hi].iter().enumerate().all(|(j, &v)| v < env[i] || (v == env[i] && lo + j >= i))
        })
        .count()
}

#[test]
fn default_bout_has_one_peak_per_pulse() {
    let spec = LaughSpec::default();
    let bout = synth_laugh_bout(&spec, 16_000).unwrap();
    assert_eq!(bout.len(), 48_000);
    let peaks = envelope_peaks(bout.samples(), 16_000);
    assert!((14..=16).contains(&peaks), "{peaks} peaks");
}

#[test]
fn bouts_are_seed_deterministic() {
    for seed in 0..4 {
        let spec = LaughSpec { seed, ..Default::default() };
        assert_eq!(synth_laugh_bout(&spec, 16_000).unwrap(), synth_laugh_bout(&spec, 16_000).unwrap());
    }
    let babble = scene(Background::Babble { seed: 9, rms: 0.05 }, 6.0, 4.0);
    let a = synth_scene(&babble).unwrap();
    let b = synth_scene(&babble).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.fingerprint.len(), 16);
    let other = synth_scene(&SceneSpec { seed: 1, ..scene(Background::WhiteNoise { variance: 0.01 }, 6.0, 4.0) }).unwrap();
    assert_ne!(a.fingerprint, other.fingerprint);
}

#[test]
fn nyquist_and_duration_preconditions() {
    let high = LaughSpec { f0_hz: 1000.0, n_harmonics: 8, ..Default::default() };
    assert!(matches!(synth_laugh_bout(&high, 16_000), Err(Error::InvalidSpec(_))));
    assert!(synth_laugh_bout(&high, 44_100).is_ok());
    let empty = LaughSpec { bout_duration_s: 0.0, ..Default::default() };
    assert!(matches!(synth_laugh_bout(&empty, 16_000), Err(Error::InvalidSpec(_))));
}

#[test]
fn silence_background_uses_reference_level() {
    let clip = synth_scene(&scene(Background::Silence, 6.0, 2.0)).unwrap();
    let fs = 16_000;
    let region = &clip.signal.samples()[2 * fs..5 * fs];
    let expected = 0.05 * 10f64.powf(6.0 / 20.0);
    assert!((rms(region) / expected - 1.0).abs() < 1e-9);
    assert!(clip.signal.samples()[..2 * fs].iter().all(|&v| v == 0.0));
}

fn scene(background: Background, gain_db: f64, start_s: f64) -> SceneSpec {
    SceneSpec {
        total_s: 10.0,
        sample_rate_hz: 16_000,
        background,
        bouts: vec![BoutPlacement { start_s, spec: LaughSpec { gain_db_over_background: gain_db, ..Default::default() } }],
        seed: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bout_region_sits_at_the_requested_gain(seed in any::<u64>(), gain in 1.0f64..15.0, start in 0.0f64..7.0, babble in any::<bool>()) {
        let background = if babble {
            Background::Babble { seed, rms: 0.05 }
        } else {
            Background::WhiteNoise { variance: 0.0025 }
        };
        let spec = SceneSpec { seed, ..scene(background.clone(), gain, start) };
        let with_bout = synth_scene(&spec).unwrap();
        let bare = synth_scene(&SceneSpec { bouts: vec![], ..spec.clone() }).unwrap();
        let a = (start * 16_000.0).round() as usize;
        let b = a + 48_000;
        let ratio_db = 20.0 * (rms(&with_bout.signal.samples()[a..b]) / rms(&bare.signal.samples()[a..b])).log10();
        prop_assert!((ratio_db - gain).abs() <= 0.5, "{} dB for {} dB", ratio_db, gain);
        for t in &with_bout.truth.intervals {
            prop_assert!(t.start_s >= 0.0 && t.end_s <= with_bout.signal.duration_s() + 1e-9);
        }
    }
}

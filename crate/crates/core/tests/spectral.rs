mod common;

use proptest::prelude::*;
use rand::Rng;

use staccato::evalkit::roc_points;
use staccato::signal::Frame;
use staccato::spectral::{
    frame_power, operating_point, optimize_threshold, otsu_threshold, welch_psd, DEFAULT_SEGMENT_LEN,
    DEFAULT_SEGMENT_OVERLAP,
};

fn frame(samples: &[f64]) -> Frame<'_> {
    Frame { index: 0, start_time_s: 0.0, samples, sample_rate_hz: 16_000 }
}

fn integrated_power(samples: &[f64]) -> f64 {
    let psd = welch_psd(&frame(samples), DEFAULT_SEGMENT_LEN, DEFAULT_SEGMENT_OVERLAP).unwrap();
    psd.values.iter().sum::<f64>() * psd.bin_width_hz
}

#[test]
fn white_noise_integrates_to_its_variance() {
    let mut rng = common::rng(11);
    let x = common::white_noise(&mut rng, 40_000, 1.0);
    let sample_variance = common::mean_square(&x);
    let got = integrated_power(&x);
    assert!((got - sample_variance).abs() / sample_variance < 0.1, "{got} vs {sample_variance}");
}

#[test]
fn psd_invariants() {
    let mut rng = common::rng(12);
    let x = common::white_noise(&mut rng, 40_000, 0.3);
    let psd = welch_psd(&frame(&x), 512, 0.5).unwrap();
    assert_eq!(psd.values.len(), 257);
    assert!(psd.values.iter().all(|&v| v >= 0.0));
    assert!(psd.bin_width_hz * (psd.values.len() - 1) as f64 <= 8000.0);
    assert!(welch_psd(&frame(&x[..256]), 512, 0.5).is_err());
}

#[test]
fn two_cluster_mixture_matches_oracle() {
    let mut rng = common::rng(13);
    let powers: Vec<f64> = (0..200)
        .map(|_| if rng.random_bool(0.5) { rng.random_range(-1.0..1.0) } else { rng.random_range(-41.0..-39.0) })
        .collect();
    let otsu = otsu_threshold(&powers).unwrap();
    assert_eq!(otsu.split, common::otsu_oracle_split(&powers));
    for &p in &powers {
        assert_eq!(otsu.passes(p), p > -20.0);
    }
}

#[test]
fn otsu_bookkeeping_invariants() {
    let mut rng = common::rng(14);
    let powers = common::random_power_vector(&mut rng, 0);
    let otsu = otsu_threshold(&powers).unwrap();
    assert!((otsu.bin_probability.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(otsu.threshold >= otsu.min && otsu.threshold <= otsu.max);
    assert!(otsu.sorted_powers.windows(2).all(|w| w[0] <= w[1]));
    for k in 1..256 {
        let w = otsu.class_probability[k];
        if w > 0.0 && w < 1.0 {
            let mu_k = otsu.class_mean[k];
            let expected = (otsu.total_mean * w - mu_k).powi(2) / (w * (1.0 - w));
            assert!((otsu.between_class_variance[k] - expected).abs() <= 1e-9 * expected.max(1.0));
        }
    }
    let best = otsu.between_class_variance[otsu.split];
    assert!(otsu.between_class_variance.iter().all(|&v| v <= best * (1.0 + 1e-12)));
}

#[test]
fn silent_frame_sits_on_the_floor() {
    let x = vec![0.0; 40_000];
    let psd = welch_psd(&frame(&x), 512, 0.5).unwrap();
    assert_eq!(frame_power(&psd).power_db, -120.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn welch_energy_matches_mean_square(seed in any::<u64>(), sd in 0.01f64..10.0, tone_hz in 100.0f64..7800.0, tone_amp in 0.0f64..2.0) {
        let mut rng = common::rng(seed);
        let mut x = common::white_noise(&mut rng, 40_000, sd);
        for (i, v) in x.iter_mut().enumerate() {
            *v += tone_amp * (2.0 * std::f64::consts::PI * tone_hz * i as f64 / 16_000.0).sin();
        }
        let ms = common::mean_square(&x);
        let got = integrated_power(&x);
        prop_assert!((got - ms).abs() / ms < 0.1, "{} vs {}", got, ms);
    }

    #[test]
    fn otsu_split_equals_exhaustive_oracle(seed in any::<u64>(), case in 0usize..4) {
        let mut rng = common::rng(seed);
        let powers = common::random_power_vector(&mut rng, case);
        prop_assert_eq!(otsu_threshold(&powers).unwrap().split, common::otsu_oracle_split(&powers));
    }

    #[test]
    fn otsu_partition_is_shift_invariant(steps in prop::collection::vec(-1600i32..0, 2..200), c in -40i32..40) {
        // sixteenth-dB grid keeps every shifted value exactly representable
        let powers: Vec<f64> = steps.iter().map(|&s| s as f64 / 16.0).collect();
        let shifted: Vec<f64> = powers.iter().map(|p| p + c as f64).collect();
        let a = otsu_threshold(&powers).unwrap();
        let b = otsu_threshold(&shifted).unwrap();
        prop_assert_eq!(a.split, b.split);
        prop_assert!((b.threshold - a.threshold - c as f64).abs() < 1e-9);
        for (p, q) in powers.iter().zip(&shifted) {
            prop_assert_eq!(a.passes(*p), b.passes(*q));
        }
    }

    #[test]
    fn brute_force_f1_dominates_otsu(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let powers = common::random_power_vector(&mut rng, 0);
        let labels: Vec<bool> = powers.iter().map(|&p| p + rng.random_range(-8.0..8.0) > -30.0).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let otsu = otsu_threshold(&powers).unwrap();
        let (otsu_f1, _) = operating_point(&powers, &labels, otsu.threshold).unwrap();
        let best = optimize_threshold(&powers, &labels).unwrap();
        prop_assert!(best.f1 >= otsu_f1);
        let pts = &best.curve.points;
        prop_assert!(pts.windows(2).all(|w| w[0].threshold <= w[1].threshold));
        prop_assert!(pts.windows(2).all(|w| w[0].true_positive_rate >= w[1].true_positive_rate));
        prop_assert!(pts.windows(2).all(|w| w[0].false_positive_rate >= w[1].false_positive_rate));
        prop_assert!((0.0..=1.0).contains(&best.curve.auc));
    }

    #[test]
    fn auc_is_invariant_under_monotone_rescoring(scores in prop::collection::vec(-50.0f64..50.0, 2..60), flips in prop::collection::vec(any::<bool>(), 60)) {
        let labels: Vec<bool> = flips[..scores.len()].to_vec();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        let warped: Vec<f64> = scores.iter().map(|s| (s / 10.0).exp() * 3.0 + 1.0).collect();
        let a = roc_points(&scores, &labels).unwrap().auc;
        let b = roc_points(&warped, &labels).unwrap().auc;
        prop_assert!((a - b).abs() < 1e-12);
    }
}

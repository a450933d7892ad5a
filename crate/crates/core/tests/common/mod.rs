#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Exhaustive Otsu oracle: scores every interior split of the 256-bin
/// histogram with exact integer arithmetic and keeps the first maximum.
/// Returns 0 when no split separates anything.
pub fn otsu_oracle_split(powers: &[f64]) -> usize {
    let min = powers.iter().copied().fold(f64::INFINITY, f64::min);
    let max = powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut hist = [0u128; 256];
    for &p in powers {
        let bin = if max <= min {
            0
        } else {
            let pos = (p - min) / (max - min) * 256.0;
            if pos <= 0.0 { 0 } else { (pos.floor() as usize).min(255) }
        };
        hist[bin] += 1;
    }
    let l: u128 = powers.len() as u128;
    let total_moment: u128 = hist.iter().enumerate().map(|(i, &h)| i as u128 * h).sum();
    let (mut best_num, mut best_den) = (0u128, 1u128);
    let mut best = 0;
    for k in 1..256 {
        let n: u128 = hist[..k].iter().sum();
        let s: u128 = hist[..k].iter().enumerate().map(|(i, &h)| i as u128 * h).sum();
        if n == 0 || n == l {
            continue;
        }
        let diff = (total_moment * n).abs_diff(l * s);
        let num = diff * diff;
        let den = n * (l - n);
        if num * best_den > best_num * den {
            best_num = num;
            best_den = den;
            best = k;
        }
    }
    best
}

/// Power vectors of the kinds the detector meets: two-cluster mixtures,
/// uniforms, a few distinct levels, and constants.
pub fn random_power_vector(rng: &mut ChaCha8Rng, case: usize) -> Vec<f64> {
    let len = rng.random_range(2..400);
    match case % 4 {
        0 => {
            let lo = Normal::new(rng.random_range(-90.0..-30.0), rng.random_range(0.5..6.0)).unwrap();
            let hi = Normal::new(rng.random_range(-30.0..10.0), rng.random_range(0.5..6.0)).unwrap();
            let w: f64 = rng.random_range(0.1..0.9);
            (0..len).map(|_| if rng.random_bool(w) { hi.sample(rng) } else { lo.sample(rng) }).collect()
        }
        1 => (0..len).map(|_| rng.random_range(-120.0..0.0)).collect(),
        2 => {
            let levels: Vec<f64> = (0..rng.random_range(2..6)).map(|_| rng.random_range(-80.0..0.0)).collect();
            (0..len).map(|_| levels[rng.random_range(0..levels.len())]).collect()
        }
        _ => vec![rng.random_range(-120.0..0.0); len],
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn white_noise(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    let d = Normal::new(0.0, sd).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

pub fn mean_square(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

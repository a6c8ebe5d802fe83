#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sbl_core::SpherePointSet;

/// `n` independent uniform points on S^{d-1}.
pub fn random_points(n: usize, d: usize, rng: &mut ChaCha8Rng) -> SpherePointSet {
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        coords.extend(v.iter().map(|x| x / r));
    }
    SpherePointSet::from_rows(d, coords).expect("unit rows")
}

/// Random points whose pairwise angular separation is at least `sep`.
pub fn separated_points(n: usize, d: usize, sep: f64, rng: &mut ChaCha8Rng) -> SpherePointSet {
    loop {
        let s = random_points(n, d, rng);
        if n < 2 || s.min_separation().0 >= sep {
            return s;
        }
    }
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn uniform_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect()
}

#![allow(dead_code)]

use acfbands::bartlett::{CovLabel, CovMatrix};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;

/// Writes one result line past the test harness capture and fails the test
/// when `pass` is false.
pub fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {id} [{name}]: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} [{name}] failed: {detail}");
}

/// Random correlation matrix from `A A'` with `A` of size `h x (h + extra)`;
/// small `extra` gives strong correlations.
pub fn random_correlation(h: usize, extra: usize, rng: &mut ChaCha8Rng) -> CovMatrix {
    let a = DMatrix::<f64>::from_fn(h, h + extra, |_, _| StandardNormal.sample(rng));
    let s = &a * a.transpose();
    let d: Vec<f64> = (0..h).map(|i| s[(i, i)].sqrt()).collect();
    let r = DMatrix::from_fn(h, h, |i, j| {
        if i == j {
            1.0
        } else {
            s[(i, j)] / (d[i] * d[j])
        }
    });
    CovMatrix::new(r, CovLabel::Correlation).unwrap()
}

/// Random symmetric matrix with unit-scale entries; usually indefinite.
pub fn random_symmetric(h: usize, rng: &mut ChaCha8Rng) -> CovMatrix {
    let mut m = DMatrix::from_fn(h, h, |_, _| rng.random_range(-1.0..1.0));
    m = (&m + m.transpose()) * 0.5;
    for i in 0..h {
        m[(i, i)] += rng.random_range(0.0..2.0);
    }
    CovMatrix::new(m, CovLabel::SigmaRhoHom).unwrap()
}

pub fn gaussian_series(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Autocorrelations by direct double summation over the definition.
pub fn naive_acf(y: &[f64], max_lag: usize) -> Vec<f64> {
    let t = y.len();
    let mut mean = 0.0;
    for v in y {
        mean += v;
    }
    mean /= t as f64;
    let mut gamma = vec![0.0; max_lag + 1];
    for (h, g) in gamma.iter_mut().enumerate() {
        let mut s = 0.0;
        for i in 0..t - h {
            s += (y[i] - mean) * (y[i + h] - mean);
        }
        *g = s / t as f64;
    }
    gamma[1..].iter().map(|g| g / gamma[0]).collect()
}

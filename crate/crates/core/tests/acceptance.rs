//! Acceptance suite. Each test prints one PASS/FAIL line for its criterion.

mod common;

use acfbands::acf::{compute_acf, TimeSeries};
use acfbands::bands::{
    band_width, confidence_band, significance_band_pointwise, significance_band_simultaneous,
    ConfidenceKind,
};
use acfbands::bartlett::{
    bartlett_analytic, melard_roy_estimate, Ar1Acf, BandwidthRule, KernelBandwidth,
    DEFAULT_TAIL_TOL,
};
use acfbands::quantile::{
    bonferroni_quantile, central_rect_prob, equicoordinate_quantile, sidak_quantile,
    QuantileOptions, QuantileRequest,
};
use acfbands::regression::{
    exact_band, lagged_design, ols_fit, shrink_sigma_rho, sigma_rho_plugin, SigmaMode,
};
use acfbands::sim::{replication_rng, run_study, simulate_ar, Dgp, SimConfig, Study};
use common::{gaussian_series, naive_acf, random_correlation, random_symmetric, verdict};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::time::Instant;

const SEED: u64 = 0x5EED;

const B_025: [[f64; 10]; 10] = [
    [
        0.938, 0.469, 0.176, 0.059, 0.018, 0.005, 0.002, 0.0, 0.0, 0.0,
    ],
    [
        0.469, 1.113, 0.527, 0.194, 0.064, 0.02, 0.006, 0.002, 0.0, 0.0,
    ],
    [
        0.176, 0.527, 1.132, 0.533, 0.196, 0.065, 0.02, 0.006, 0.002, 0.0,
    ],
    [
        0.059, 0.194, 0.533, 1.133, 0.533, 0.196, 0.065, 0.02, 0.006, 0.002,
    ],
    [
        0.018, 0.064, 0.196, 0.533, 1.133, 0.533, 0.196, 0.065, 0.02, 0.006,
    ],
    [
        0.005, 0.02, 0.065, 0.196, 0.533, 1.133, 0.533, 0.196, 0.065, 0.02,
    ],
    [
        0.002, 0.006, 0.02, 0.065, 0.196, 0.533, 1.133, 0.533, 0.196, 0.065,
    ],
    [
        0.0, 0.002, 0.006, 0.02, 0.065, 0.196, 0.533, 1.133, 0.533, 0.196,
    ],
    [
        0.0, 0.0, 0.002, 0.006, 0.02, 0.065, 0.196, 0.533, 1.133, 0.533,
    ],
    [
        0.0, 0.0, 0.0, 0.002, 0.006, 0.02, 0.065, 0.196, 0.533, 1.133,
    ],
];

const B_05: [[f64; 10]; 10] = [
    [
        0.75, 0.75, 0.562, 0.375, 0.234, 0.141, 0.082, 0.047, 0.026, 0.015,
    ],
    [
        0.75, 1.312, 1.125, 0.797, 0.516, 0.316, 0.188, 0.108, 0.062, 0.034,
    ],
    [
        0.562, 1.125, 1.547, 1.266, 0.879, 0.562, 0.343, 0.202, 0.116, 0.066,
    ],
    [
        0.375, 0.797, 1.266, 1.629, 1.312, 0.905, 0.577, 0.351, 0.207, 0.119,
    ],
    [
        0.234, 0.516, 0.879, 1.312, 1.655, 1.327, 0.913, 0.582, 0.353, 0.208,
    ],
    [
        0.141, 0.316, 0.562, 0.905, 1.327, 1.663, 1.332, 0.916, 0.583, 0.354,
    ],
    [
        0.082, 0.188, 0.343, 0.577, 0.913, 1.332, 1.666, 1.333, 0.916, 0.583,
    ],
    [
        0.047, 0.108, 0.202, 0.351, 0.582, 0.916, 1.333, 1.666, 1.333, 0.917,
    ],
    [
        0.026, 0.062, 0.116, 0.207, 0.353, 0.583, 0.916, 1.333, 1.667, 1.333,
    ],
    [
        0.015, 0.034, 0.066, 0.119, 0.208, 0.354, 0.583, 0.917, 1.333, 1.667,
    ],
];

const B_075: [[f64; 10]; 10] = [
    [
        0.438, 0.656, 0.738, 0.738, 0.692, 0.623, 0.545, 0.467, 0.394, 0.328,
    ],
    [
        0.656, 1.176, 1.395, 1.43, 1.361, 1.237, 1.09, 0.939, 0.796, 0.665,
    ],
    [
        0.738, 1.395, 1.868, 2.017, 1.975, 1.828, 1.631, 1.419, 1.21, 1.017,
    ],
    [
        0.738, 1.43, 2.017, 2.413, 2.485, 2.37, 2.157, 1.902, 1.64, 1.39,
    ],
    [
        0.692, 1.361, 1.975, 2.485, 2.807, 2.813, 2.641, 2.379, 2.083, 1.786,
    ],
    [
        0.623, 1.237, 1.828, 2.37, 2.813, 3.078, 3.035, 2.821, 2.524, 2.199,
    ],
    [
        0.545, 1.09, 1.631, 2.157, 2.641, 3.035, 3.258, 3.18, 2.938, 2.618,
    ],
    [
        0.467, 0.939, 1.419, 1.902, 2.379, 2.821, 3.18, 3.375, 3.274, 3.012,
    ],
    [
        0.394, 0.796, 1.21, 1.64, 2.083, 2.524, 2.938, 3.274, 3.45, 3.333,
    ],
    [
        0.328, 0.665, 1.017, 1.39, 1.786, 2.199, 2.618, 3.012, 3.333, 3.497,
    ],
];

#[test]
fn criterion_1_bartlett_matrices() {
    let start = Instant::now();
    let identity: [[f64; 10]; 10] =
        std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }));
    let cases = [(0.0, identity), (0.25, B_025), (0.5, B_05), (0.75, B_075)];
    let mut worst = 0.0f64;
    let mut entries = 0;
    for (phi, table) in cases {
        let b = bartlett_analytic(&Ar1Acf(phi), 10, DEFAULT_TAIL_TOL).unwrap();
        for (i, row) in table.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((b.get(i, j) - v).abs());
                entries += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    // tabulated entries are rounded to three decimals; exact halves sit on the edge
    let pass = entries == 400 && worst <= 5e-4 + 1e-12 && secs < 1.0;
    verdict(
        1,
        "Bartlett matrices",
        pass,
        &format!("{entries} entries, max |diff| {worst:.2e} <= 5e-4, {secs:.3}s"),
    );
}

#[test]
fn criterion_2_significance_widths() {
    let start = Instant::now();
    let simultaneous = [
        (50, [0.465, 0.724, 0.810]),
        (200, [0.233, 0.362, 0.405]),
        (800, [0.116, 0.181, 0.202]),
    ];
    let mut worst = 0.0f64;
    let mut cells = 0;
    for (t, row) in simultaneous {
        for (h, want) in [1, 10, 25].into_iter().zip(row) {
            let sim = significance_band_simultaneous(t, h, 0.1).unwrap();
            let pw = significance_band_pointwise(t, h, 0.1).unwrap();
            let want_pw = row[0];
            worst = worst.max((band_width(&sim)[0] - want).abs());
            worst = worst.max((band_width(&pw)[0] - want_pw).abs());
            cells += 2;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = cells == 18 && worst <= 1e-3 && secs < 5.0;
    verdict(
        2,
        "significance band widths",
        pass,
        &format!("{cells} widths, max |diff| {worst:.2e} <= 1e-3, {secs:.3}s"),
    );
}

fn cell(study: Study, dgp: Dgp, t: usize, h: usize) -> acfbands::sim::SimResult {
    let mut cfg = SimConfig::new(study, dgp, t, h);
    cfg.reps = 1000;
    cfg.seed = SEED;
    cfg.bandwidth = BandwidthRule::MSqrt(1.0);
    run_study(&cfg).unwrap()
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

#[test]
fn criterion_3_observed_series_rejection_rates() {
    let start = Instant::now();
    let a = cell(Study::Significance, Dgp::Ar1 { phi: 0.0 }, 800, 10);
    let b = cell(Study::Significance, Dgp::Ar1 { phi: 0.25 }, 200, 1);
    let c = cell(Study::Significance, Dgp::Ar1 { phi: 0.0 }, 50, 25);
    let checks = [
        (
            "simult phi=0 T=800 H=10",
            a.rate("simult_sb").unwrap(),
            0.096,
            0.03,
        ),
        (
            "simult phi=0.25 T=200 H=1",
            b.rate("simult_sb").unwrap(),
            0.959,
            0.03,
        ),
        (
            "Box-Pierce phi=0 T=800 H=10",
            a.rate("box_pierce").unwrap(),
            0.105,
            0.03,
        ),
        (
            "simult phi=0 T=50 H=25",
            c.rate("simult_sb").unwrap(),
            0.021,
            0.015,
        ),
    ];
    let secs = start.elapsed().as_secs_f64();
    let mut pass = secs < 300.0;
    let mut detail = Vec::new();
    for (name, got, want, tol) in checks {
        pass &= within(got, want, tol);
        detail.push(format!("{name}: {got:.3} vs {want}+-{tol}"));
    }
    detail.push(format!("{secs:.0}s"));
    verdict(
        3,
        "rejection rates, observed series",
        pass,
        &detail.join("; "),
    );
}

#[test]
fn criterion_4_confidence_coverage() {
    let start = Instant::now();
    let cells = [
        (0.0, 800, 25, 0.910),
        (0.75, 800, 10, 0.895),
        (0.5, 200, 10, 0.887),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (phi, t, h, want) in cells {
        let r = cell(Study::Confidence, Dgp::Ar1 { phi }, t, h);
        let supt = r.rate("supt").unwrap();
        let bonf = r.rate("bonferroni").unwrap();
        pass &= within(supt, want, 0.03) && bonf >= supt;
        detail.push(format!(
            "phi={phi} T={t} H={h}: supt {supt:.3} vs {want}+-0.03, bonferroni {bonf:.3}"
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 600.0;
    detail.push(format!("{secs:.0}s"));
    verdict(4, "confidence band coverage", pass, &detail.join("; "));
}

#[test]
fn criterion_5_dynamic_regression_rejection_rates() {
    let start = Instant::now();
    let size = cell(
        Study::Dynamic,
        Dgp::Ar2 {
            phi1: 0.5,
            phi2: 0.0,
        },
        800,
        10,
    );
    let naive = cell(
        Study::Dynamic,
        Dgp::Ar2 {
            phi1: 0.5,
            phi2: 0.0,
        },
        800,
        1,
    );
    let power = cell(
        Study::Dynamic,
        Dgp::Ar2 {
            phi1: 0.5,
            phi2: 0.25,
        },
        200,
        10,
    );
    let exact_size = size.rate("exact_sb").unwrap();
    let naive_size = naive.rate("naive_sb").unwrap();
    let exact_power = power.rate("exact_sb").unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = within(exact_size, 0.110, 0.03)
        && naive_size <= 0.01
        && within(exact_power, 0.801, 0.04)
        && secs < 600.0;
    verdict(
        5,
        "rejection rates, dynamic regression",
        pass,
        &format!(
            "exact size {exact_size:.3} vs 0.110+-0.03; naive H=1 {naive_size:.3} <= 0.01; \
             exact power {exact_power:.3} vs 0.801+-0.04; {secs:.0}s"
        ),
    );
}

#[test]
fn criterion_6_property_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let tol = 1e-3;
    let opts = QuantileOptions {
        prob_tol: tol,
        seed: SEED,
    };
    let alpha = 0.1;
    let mut failures: Vec<String> = Vec::new();

    // quantile ordering against independence and Bonferroni
    for i in 0..200 {
        let h = rng.random_range(2..=15);
        let extra = rng.random_range(1..=2 * h);
        let r = random_correlation(h, extra, &mut rng);
        let q = equicoordinate_quantile(&QuantileRequest {
            sigma: r.clone(),
            tau: 1.0 - alpha,
            options: opts,
        })
        .unwrap();
        let q_ind = sidak_quantile(1.0 - alpha, h);
        let q_bonf = bonferroni_quantile(alpha, h);
        // at the independence quantile the dependent box holds at least 1 - alpha
        let p = central_rect_prob(&r, q_ind, tol, SEED).unwrap().value;
        if q > q_ind + 2.0 * tol || q_ind > q_bonf + 2.0 * tol || p < 1.0 - alpha - 2.0 * tol {
            failures.push(format!(
                "ordering draw {i}: q={q} q_ind={q_ind} q_bonf={q_bonf} p={p}"
            ));
        }
    }

    // nesting of confidence bands built from the same estimate
    for i in 0..100 {
        let phi = rng.random_range(-0.8..0.8);
        let t = rng.random_range(60..400);
        let h = rng.random_range(1..=12);
        let y = simulate_ar(Dgp::Ar1 { phi }, t, 200, &mut rng).unwrap();
        let acf = compute_acf(&y, h).unwrap();
        let bhat = melard_roy_estimate(&acf, &KernelBandwidth::bartlett(BandwidthRule::MSqrt(1.0)))
            .unwrap();
        let band = |k| confidence_band(&acf, &bhat, alpha, k, &opts).unwrap();
        let (pw, supt, bonf) = (
            band(ConfidenceKind::Pointwise),
            band(ConfidenceKind::Supt),
            band(ConfidenceKind::Bonferroni),
        );
        for j in 0..h {
            let nested = bonf.lower[j] <= supt.lower[j]
                && supt.lower[j] <= pw.lower[j]
                && pw.upper[j] <= supt.upper[j]
                && supt.upper[j] <= bonf.upper[j];
            if !nested {
                failures.push(format!("nesting input {i} lag {}", j + 1));
            }
        }
    }

    // exact (hom) band never wider than the naive band
    for i in 0..100 {
        let phi1 = rng.random_range(-0.8..0.8);
        let phi2 = rng.random_range(-0.1..0.1);
        let t = rng.random_range(80..400);
        let h = rng.random_range(1..=10);
        let y = simulate_ar(Dgp::Ar2 { phi1, phi2 }, t, 200, &mut rng).unwrap();
        let fit = ols_fit(&lagged_design(y.values(), &[], 1, 0, false).unwrap()).unwrap();
        let est = shrink_sigma_rho(&sigma_rho_plugin(&fit, h, SigmaMode::Hom).unwrap());
        let exact = exact_band(&est, fit.t(), alpha, &opts).unwrap();
        let naive = significance_band_simultaneous(fit.t(), h, alpha).unwrap();
        let slack = 2.0 * tol / (fit.t() as f64).sqrt();
        for j in 0..h {
            if exact.upper[j] > naive.upper[j] + slack {
                failures.push(format!("width dominance fit {i} lag {}", j + 1));
            }
        }
    }

    // shrinkage postconditions
    for i in 0..100 {
        let h = rng.random_range(1..=10);
        let raw = random_symmetric(h, &mut rng);
        let est = shrink_sigma_rho(&raw);
        let keep = est.k_star - 1;
        let m = est.shrunk.matrix();
        for k in 1..=keep {
            let det = m.view((0, 0), (k, k)).into_owned().determinant();
            if det.is_nan() || det <= 0.0 {
                failures.push(format!("shrinkage matrix {i}: leading minor {k} is {det}"));
            }
        }
        for r in 0..h {
            for c in 0..h {
                let want = if r < keep && c < keep {
                    raw.get(r, c)
                } else if r == c {
                    1.0
                } else {
                    0.0
                };
                if m[(r, c)] != want {
                    failures.push(format!("shrinkage matrix {i}: entry ({r},{c})"));
                }
            }
        }
    }

    // kernel estimate stays positive semidefinite
    for i in 0..100 {
        let phi = rng.random_range(-0.9..0.9);
        let t = rng.random_range(30..500);
        let h = rng.random_range(1..=20.min(t - 1));
        let y = simulate_ar(Dgp::Ar1 { phi }, t, 200, &mut rng).unwrap();
        let acf = compute_acf(&y, h).unwrap();
        let m = rng.random_range(0.5..5.0);
        let bhat =
            melard_roy_estimate(&acf, &KernelBandwidth::bartlett(BandwidthRule::MSqrt(m))).unwrap();
        let e = bhat.min_eigenvalue();
        if e < -1e-8 {
            failures.push(format!("kernel estimate {i}: min eigenvalue {e}"));
        }
    }

    let secs = start.elapsed().as_secs_f64();
    let pass = failures.is_empty() && secs < 120.0;
    let detail = if failures.is_empty() {
        format!("200 orderings, 100 nestings, 100 width checks, 100 shrinkages, 100 eigenvalue checks; {secs:.1}s")
    } else {
        format!(
            "{} failures, first: {}; {secs:.1}s",
            failures.len(),
            failures[0]
        )
    };
    verdict(6, "property suite", pass, &detail);
}

/// Plain Monte Carlo box probability with its standard error.
fn mc_box_prob(r: &DMatrix<f64>, q: f64, draws: usize, seed: u64) -> (f64, f64) {
    let h = r.nrows();
    let l = r.clone().cholesky().unwrap().l();
    let chunks = 40;
    let per = draws / chunks;
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replication_rng(seed, c);
            let mut z = vec![0.0; h];
            let mut n = 0;
            for _ in 0..per {
                for v in z.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let inside = (0..h).all(|i| {
                    let x: f64 = (0..=i).map(|j| l[(i, j)] * z[j]).sum();
                    x.abs() <= q
                });
                n += usize::from(inside);
            }
            n
        })
        .sum();
    let n = (per * chunks) as f64;
    let p = hits as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

#[test]
fn criterion_7_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for i in 0..20 {
        let h = rng.random_range(2..=6);
        let r = random_correlation(h, rng.random_range(1..=h), &mut rng);
        let q = rng.random_range(1.2..3.0);
        let est = central_rect_prob(&r, q, 1e-5, SEED).unwrap().value;
        let (p, se) = mc_box_prob(r.matrix(), q, 10_000_000, SEED + i as u64);
        let z = (est - p).abs() / se;
        worst = worst.max(z);
        if z > 3.0 {
            bad.push(format!(
                "pair {i}: H={h} q={q:.3} qmc={est:.6} mc={p:.6} se={se:.1e}"
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 77);
    let mut mismatched = 0;
    for _ in 0..50 {
        let n = rng.random_range(3..=20);
        let y: Vec<f64> = gaussian_series(n, &mut rng)
            .into_iter()
            .map(|v| 3.0 * v + 1.5)
            .collect();
        let h = rng.random_range(1..n);
        let got = compute_acf(&TimeSeries::new(y.clone()).unwrap(), h).unwrap();
        if got.rho() != naive_acf(&y, h).as_slice() {
            mismatched += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = bad.is_empty() && mismatched == 0;
    verdict(
        7,
        "oracle equivalence",
        pass,
        &format!(
            "box probabilities: worst {worst:.2} oracle SE over 20 pairs{}; ACF: {mismatched}/50 series differ from the double loop; {secs:.0}s",
            bad.first().map(|b| format!(" ({b})")).unwrap_or_default()
        ),
    );
}

#[test]
fn criterion_8_residual_covariance_closed_form() {
    let (t, h, reps) = (100_000, 5, 20);
    let mut worst = 0.0f64;
    for phi in [0.25, 0.5] {
        let mut avg = DMatrix::<f64>::zeros(h, h);
        for rep in 0..reps {
            let mut rng = replication_rng(SEED, rep);
            let y = simulate_ar(Dgp::Ar1 { phi }, t, 200, &mut rng).unwrap();
            let fit = ols_fit(&lagged_design(y.values(), &[], 1, 0, false).unwrap()).unwrap();
            avg += sigma_rho_plugin(&fit, h, SigmaMode::Hom).unwrap().matrix() / reps as f64;
        }
        for i in 0..h {
            for j in 0..h {
                let id = if i == j { 1.0 } else { 0.0 };
                let want = id - (1.0 - phi * phi) * phi.powi((i + j) as i32);
                worst = worst.max((avg[(i, j)] - want).abs());
            }
        }
    }
    verdict(
        8,
        "residual covariance closed form",
        worst <= 0.02,
        &format!("max |diff| {worst:.4} <= 0.02 over phi in {{0.25, 0.5}}, H=5, T=1e5, 20 reps"),
    );
}

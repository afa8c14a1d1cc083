//! Monte-Carlo studies of size, power, coverage and width.
//!
//! Replication `r` draws from `ChaCha8Rng` seeded with the study seed on
//! stream `r`, so results do not depend on how replications are scheduled.

use crate::acf::{compute_acf, AcfEstimate, TimeSeries};
use crate::bands::{
    band_width, confidence_band, covers_path, rejects_white_noise, significance_band_pointwise,
    significance_band_simultaneous, Band, ConfidenceKind,
};
use crate::bartlett::{melard_roy_estimate, BandwidthRule, CovMatrix, KernelBandwidth};
use crate::error::{Error, Result};
use crate::portmanteau::{box_pierce, breusch_godfrey, ljung_box};
use crate::quantile::QuantileOptions;
use crate::regression::{
    exact_band, lagged_design, ols_fit, residual_acf, shrink_sigma_rho, sigma_rho_plugin, SigmaMode,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const DEFAULT_REPS: usize = 1000;
pub const DEFAULT_BURN_IN: usize = 200;
/// Box-probability tolerance used for quantiles inside simulations. A 1e-3
/// probability error moves a coverage frequency by about 1e-3, an order of
/// magnitude below the Monte-Carlo standard error at 1000 replications.
pub const SIM_PROB_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum Dgp {
    Ar1 { phi: f64 },
    Ar2 { phi1: f64, phi2: f64 },
}

impl Dgp {
    fn coefficients(self) -> (f64, f64) {
        match self {
            Dgp::Ar1 { phi } => (phi, 0.0),
            Dgp::Ar2 { phi1, phi2 } => (phi1, phi2),
        }
    }

    /// Stationarity triangle `|phi2| < 1`, `phi2 +- phi1 < 1`.
    pub fn check(self) -> Result<()> {
        let (a, b) = self.coefficients();
        let ok = a.is_finite() && b.is_finite() && b.abs() < 1.0 && b + a < 1.0 && b - a < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::NonStationary(format!("{self:?}")))
        }
    }

    /// Autocorrelations `rho(1..=H)` from the Yule–Walker recursion.
    pub fn true_acf(self, h: usize) -> Result<Vec<f64>> {
        self.check()?;
        let (a, b) = self.coefficients();
        let mut rho = Vec::with_capacity(h);
        let (mut prev2, mut prev1) = (1.0, a / (1.0 - b));
        for i in 0..h {
            if i == 0 {
                rho.push(prev1);
                continue;
            }
            let next = a * prev1 + b * prev2;
            rho.push(next);
            prev2 = prev1;
            prev1 = next;
        }
        Ok(rho)
    }
}

impl std::fmt::Display for Dgp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dgp::Ar1 { phi } => write!(f, "AR(1) phi={phi}"),
            Dgp::Ar2 { phi1, phi2 } => write!(f, "AR(2) phi1={phi1} phi2={phi2}"),
        }
    }
}

/// `t` observations of the process after `burn_in` discarded draws from a
/// zero initial state, with standard normal innovations.
pub fn simulate_ar(dgp: Dgp, t: usize, burn_in: usize, rng: &mut ChaCha8Rng) -> Result<TimeSeries> {
    dgp.check()?;
    let (a, b) = dgp.coefficients();
    let n = t + burn_in;
    let mut y = Vec::with_capacity(n);
    let (mut y1, mut y2) = (0.0, 0.0);
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(rng);
        let v = a * y1 + b * y2 + e;
        y.push(v);
        y2 = y1;
        y1 = v;
    }
    TimeSeries::new(y.split_off(burn_in))
}

/// Random stream of replication `rep`.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Significance,
    Confidence,
    Dynamic,
    BandwidthSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dgp: Dgp,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "H")]
    pub h: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub bandwidth: BandwidthRule,
    pub burn_in: usize,
    pub study: Study,
    pub quantile: QuantileOptions,
}

impl SimConfig {
    pub fn new(study: Study, dgp: Dgp, t: usize, h: usize) -> Self {
        Self {
            dgp,
            t,
            h,
            alpha: 0.1,
            reps: DEFAULT_REPS,
            seed: 0x5EED,
            bandwidth: BandwidthRule::default(),
            burn_in: DEFAULT_BURN_IN,
            study,
            quantile: QuantileOptions {
                prob_tol: SIM_PROB_TOL,
                seed: crate::quantile::DEFAULT_SEED,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        self.dgp.check()?;
        crate::bands::check_params(self.t, self.h, self.alpha)?;
        // the dynamic study loses one observation to the lag
        if self.study == Study::Dynamic && self.h + 1 >= self.t {
            return Err(Error::InvalidLag {
                lag: self.h,
                max: self.t.saturating_sub(2),
            });
        }
        self.quantile.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// Rejection frequency for tests and significance bands, coverage
    /// frequency for confidence bands.
    pub rate: f64,
    /// Full band width averaged over lags and replications.
    pub avg_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub reps_used: usize,
    pub methods: Vec<MethodResult>,
}

impl SimResult {
    pub fn rate(&self, method: &str) -> Option<f64> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| m.rate)
    }

    pub fn avg_width(&self, method: &str) -> Option<f64> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .and_then(|m| m.avg_width)
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:?} study: {}, T={}, H={}, alpha={}, reps={}, seed={}, L={}",
            c.study,
            c.dgp,
            c.t,
            c.h,
            c.alpha,
            self.reps_used,
            c.seed,
            c.bandwidth.describe()
        );
        let label = match c.study {
            Study::Significance | Study::Dynamic => "rejection",
            Study::Confidence | Study::BandwidthSweep => "coverage",
        };
        let w = self
            .methods
            .iter()
            .map(|m| m.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let _ = writeln!(out, "{:<w$}  {:>9}  {:>9}", "method", label, "avg_width");
        for m in &self.methods {
            let width = m.avg_width.map_or("-".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(out, "{:<w$}  {:>9.3}  {:>9}", m.method, m.rate, width);
        }
        out
    }
}

/// Outcome of one method in one replication.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    hit: bool,
    width: Option<f64>,
}

fn mean_width(b: &Band) -> f64 {
    let w = band_width(b);
    w.iter().sum::<f64>() / w.len() as f64
}

fn band_outcome(hit: bool, b: &Band) -> Outcome {
    Outcome {
        hit,
        width: Some(mean_width(b)),
    }
}

fn test_outcome(hit: bool) -> Outcome {
    Outcome { hit, width: None }
}

fn run<F>(cfg: &SimConfig, names: Vec<String>, rep: F) -> Result<SimResult>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<Outcome>> + Sync,
{
    cfg.validate()?;
    let outcomes: Vec<Vec<Outcome>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| rep(&mut replication_rng(cfg.seed, r)))
        .collect::<Result<_>>()?;
    let n = cfg.reps as f64;
    let methods = names
        .into_iter()
        .enumerate()
        .map(|(i, method)| {
            let hits = outcomes.iter().filter(|o| o[i].hit).count();
            let widths: Option<f64> = outcomes.iter().map(|o| o[i].width).sum();
            MethodResult {
                method,
                rate: hits as f64 / n,
                avg_width: widths.map(|w| w / n),
            }
        })
        .collect();
    Ok(SimResult {
        config: *cfg,
        reps_used: cfg.reps,
        methods,
    })
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn observed(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Result<AcfEstimate> {
    let y = simulate_ar(cfg.dgp, cfg.t, cfg.burn_in, rng)?;
    compute_acf(&y, cfg.h)
}

fn supt(cfg: &SimConfig, acf: &AcfEstimate, rule: BandwidthRule) -> Result<Band> {
    let bhat = melard_roy_estimate(acf, &KernelBandwidth::bartlett(rule))?;
    confidence_band(acf, &bhat, cfg.alpha, ConfidenceKind::Supt, &cfg.quantile)
}

/// Rejection frequencies of the white-noise null: simultaneous significance
/// band, sup-t confidence band (rejects when zero is not covered), pointwise
/// significance band, Box–Pierce and Ljung–Box.
pub fn run_significance_study(cfg: &SimConfig) -> Result<SimResult> {
    let sim = significance_band_simultaneous(cfg.t, cfg.h, cfg.alpha)?;
    let pw = significance_band_pointwise(cfg.t, cfg.h, cfg.alpha)?;
    let zero = vec![0.0; cfg.h];
    run(
        cfg,
        names(&[
            "simult_sb",
            "supt_cb",
            "pointwise_sb",
            "box_pierce",
            "ljung_box",
        ]),
        |rng| {
            let acf = observed(cfg, rng)?;
            let cb = supt(cfg, &acf, cfg.bandwidth)?;
            Ok(vec![
                band_outcome(rejects_white_noise(&acf, &sim)?, &sim),
                band_outcome(!covers_path(&cb, &zero)?, &cb),
                band_outcome(rejects_white_noise(&acf, &pw)?, &pw),
                test_outcome(box_pierce(&acf, cfg.h)?.rejects(cfg.alpha)),
                test_outcome(ljung_box(&acf, cfg.h)?.rejects(cfg.alpha)),
            ])
        },
    )
}

/// Coverage of the true autocorrelation function by sup-t, Bonferroni and
/// pointwise confidence bands.
pub fn run_confidence_study(cfg: &SimConfig) -> Result<SimResult> {
    let truth = cfg.dgp.true_acf(cfg.h)?;
    let kb = KernelBandwidth::bartlett(cfg.bandwidth);
    run(cfg, names(&["supt", "bonferroni", "pointwise"]), |rng| {
        let acf = observed(cfg, rng)?;
        let bhat: CovMatrix = melard_roy_estimate(&acf, &kb)?;
        [
            ConfidenceKind::Supt,
            ConfidenceKind::Bonferroni,
            ConfidenceKind::Pointwise,
        ]
        .into_iter()
        .map(|k| {
            let b = confidence_band(&acf, &bhat, cfg.alpha, k, &cfg.quantile)?;
            Ok(band_outcome(covers_path(&b, &truth)?, &b))
        })
        .collect()
    })
}

/// White-noise tests on residuals of an AR(1) regression: exact (hom) and
/// naive simultaneous bands, naive pointwise band, Ljung–Box and
/// Breusch–Godfrey.
pub fn run_dynamic_study(cfg: &SimConfig) -> Result<SimResult> {
    run(
        cfg,
        names(&[
            "exact_sb",
            "naive_sb",
            "naive_pointwise_sb",
            "ljung_box",
            "breusch_godfrey",
        ]),
        |rng| {
            let y = simulate_ar(cfg.dgp, cfg.t, cfg.burn_in, rng)?;
            let data = lagged_design(y.values(), &[], 1, 0, false)?;
            let fit = ols_fit(&data)?;
            let t = fit.t();
            let acf = residual_acf(&fit, cfg.h)?;
            let est = shrink_sigma_rho(&sigma_rho_plugin(&fit, cfg.h, SigmaMode::Hom)?);
            let exact = exact_band(&est, t, cfg.alpha, &cfg.quantile)?;
            let naive = significance_band_simultaneous(t, cfg.h, cfg.alpha)?;
            let pw = significance_band_pointwise(t, cfg.h, cfg.alpha)?;
            Ok(vec![
                band_outcome(rejects_white_noise(&acf, &exact)?, &exact),
                band_outcome(rejects_white_noise(&acf, &naive)?, &naive),
                band_outcome(rejects_white_noise(&acf, &pw)?, &pw),
                test_outcome(ljung_box(&acf, cfg.h)?.rejects(cfg.alpha)),
                test_outcome(breusch_godfrey(&fit, &data, cfg.h)?.rejects(cfg.alpha)),
            ])
        },
    )
}

/// Bandwidth rules compared by the sweep.
pub fn sweep_rules() -> [BandwidthRule; 5] {
    [
        BandwidthRule::MSqrt(5.0),
        BandwidthRule::MSqrt(3.0),
        BandwidthRule::MSqrt(1.0),
        BandwidthRule::CCubeRoot(1.0),
        BandwidthRule::CCubeRoot(0.75),
    ]
}

/// Sup-t coverage of the true ACF for each rule in [`sweep_rules`]; the
/// configured bandwidth is ignored.
pub fn run_bandwidth_sweep(cfg: &SimConfig) -> Result<SimResult> {
    let truth = cfg.dgp.true_acf(cfg.h)?;
    let rules = sweep_rules();
    let labels = rules
        .iter()
        .map(|r| format!("supt L={}", r.describe()))
        .collect();
    run(cfg, labels, |rng| {
        let acf = observed(cfg, rng)?;
        rules
            .iter()
            .map(|r| {
                let b = supt(cfg, &acf, *r)?;
                Ok(band_outcome(covers_path(&b, &truth)?, &b))
            })
            .collect()
    })
}

/// Dispatches on `cfg.study`.
pub fn run_study(cfg: &SimConfig) -> Result<SimResult> {
    match cfg.study {
        Study::Significance => run_significance_study(cfg),
        Study::Confidence => run_confidence_study(cfg),
        Study::Dynamic => run_dynamic_study(cfg),
        Study::BandwidthSweep => run_bandwidth_sweep(cfg),
    }
}

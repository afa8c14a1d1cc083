//! Asymptotic covariance of sample autocorrelations.
//!
//! Two routes to the same matrix: the analytic Bartlett sum for a known
//! autocorrelation function, and the Mélard–Roy plug-in estimator that
//! substitutes kernel-damped sample autocorrelations into the same sum.

use crate::acf::AcfEstimate;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

const SYMMETRY_TOL: f64 = 1e-10;
const MAX_TRUNCATION: usize = 1_000_000;

/// Default absolute tolerance on the omitted tail of the analytic sum.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovLabel {
    BartlettAnalytic,
    MelardRoy,
    SigmaRhoHom,
    SigmaRhoHet,
    Identity,
    Correlation,
    Custom,
}

/// Symmetric `H x H` covariance matrix indexed by lag (entry `(g-1, h-1)` holds
/// the covariance between lags `g` and `h`).
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    entries: DMatrix<f64>,
    label: CovLabel,
}

impl CovMatrix {
    /// Validates squareness, symmetry (to 1e-10) and finiteness of the
    /// diagonal, then stores the exactly symmetrised matrix.
    pub fn new(entries: DMatrix<f64>, label: CovLabel) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidInput("empty covariance matrix".into()));
        }
        let n = entries.nrows();
        for i in 0..n {
            if !entries[(i, i)].is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite diagonal entry {i}"
                )));
            }
            for j in 0..i {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                let scale = 1.0f64.max(a.abs()).max(b.abs());
                if !((a - b).abs() <= SYMMETRY_TOL * scale) {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        let mut m = entries;
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { entries: m, label })
    }

    pub fn from_rows(rows: &[Vec<f64>], label: CovLabel) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: r.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), label)
    }

    pub fn identity(h: usize) -> Self {
        Self {
            entries: DMatrix::identity(h, h),
            label: CovLabel::Identity,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn label(&self) -> CovLabel {
        self.label
    }

    pub fn with_label(mut self, label: CovLabel) -> Self {
        self.label = label;
        self
    }

    /// Entry for lags `g+1` and `h+1` (zero-based indices).
    pub fn get(&self, g: usize, h: usize) -> f64 {
        self.entries[(g, h)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)]).collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.entries[(i, j)]).collect())
            .collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_identity(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| self.entries[(i, j)] == if i == j { 1.0 } else { 0.0 }))
    }
}

/// Bound on `|rho(k)|` used to truncate the infinite Bartlett sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// `rho(k) = 0` for every `k > last_nonzero`.
    Finite { last_nonzero: usize },
    /// `|rho(k)| <= scale * decay^k` with `0 <= decay < 1`.
    Geometric { scale: f64, decay: f64 },
}

/// A theoretical autocorrelation function with `rho(0) = 1`.
pub trait AcfModel {
    /// Autocorrelation at lag `k >= 0`.
    fn rho(&self, k: usize) -> f64;
    fn envelope(&self) -> Envelope;
}

/// AR(1) autocorrelations `rho(k) = phi^k`.
#[derive(Debug, Clone, Copy)]
pub struct Ar1Acf(pub f64);

impl AcfModel for Ar1Acf {
    fn rho(&self, k: usize) -> f64 {
        self.0.powi(k as i32)
    }

    fn envelope(&self) -> Envelope {
        if self.0 == 0.0 {
            Envelope::Finite { last_nonzero: 0 }
        } else {
            Envelope::Geometric {
                scale: 1.0,
                decay: self.0.abs(),
            }
        }
    }
}

/// Autocorrelations given explicitly for lags `1..=m`, zero afterwards.
/// An empty vector is white noise.
#[derive(Debug, Clone)]
pub struct FiniteAcf(pub Vec<f64>);

impl AcfModel for FiniteAcf {
    fn rho(&self, k: usize) -> f64 {
        match k {
            0 => 1.0,
            k => self.0.get(k - 1).copied().unwrap_or(0.0),
        }
    }

    fn envelope(&self) -> Envelope {
        let last = self.0.iter().rposition(|r| *r != 0.0).map_or(0, |i| i + 1);
        Envelope::Finite { last_nonzero: last }
    }
}

/// Number of summation terms needed so the omitted tail is below `tail_tol`.
fn truncation_index(env: Envelope, h: usize, tail_tol: f64) -> Result<usize> {
    match env {
        Envelope::Finite { last_nonzero } => Ok(last_nonzero + h),
        Envelope::Geometric { scale, decay } => {
            if !(0.0..1.0).contains(&decay) || !(scale >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "geometric envelope needs 0 <= decay < 1, got {decay}"
                )));
            }
            if decay == 0.0 || scale == 0.0 {
                return Ok(h);
            }
            // For k > h: |a_g(k)| <= 4 scale decay^(k-g), so the tail beyond K is at most
            // 16 scale^2 decay^(2(K+1) - 2h) / (1 - decay^2).
            let lead = 16.0 * scale * scale / (1.0 - decay * decay);
            let mut k = h;
            let mut tail = lead * decay.powi(2);
            while tail > tail_tol {
                k += 1;
                if k > MAX_TRUNCATION {
                    return Err(Error::TruncationFailure {
                        tol: tail_tol,
                        cap: MAX_TRUNCATION,
                    });
                }
                tail *= decay * decay;
            }
            Ok(k)
        }
    }
}

/// Bartlett's formula
/// `b_gh = sum_{k>=1} [rho(k+g)+rho(k-g)-2rho(k)rho(g)][rho(k+h)+rho(k-h)-2rho(k)rho(h)]`,
/// truncated once the envelope bound on the remainder drops below `tail_tol`.
pub fn bartlett_analytic(model: &dyn AcfModel, h: usize, tail_tol: f64) -> Result<CovMatrix> {
    if h == 0 {
        return Err(Error::InvalidLag {
            lag: 0,
            max: usize::MAX,
        });
    }
    if !(tail_tol > 0.0) {
        return Err(Error::InvalidInput("tail_tol must be positive".into()));
    }
    let kmax = truncation_index(model.envelope(), h, tail_tol)?;
    let rho: Vec<f64> = (0..=kmax + h).map(|k| model.rho(k)).collect();
    let terms = DMatrix::from_fn(kmax, h, |ki, gi| {
        let (k, g) = (ki + 1, gi + 1);
        rho[k + g] + rho[k.abs_diff(g)] - 2.0 * rho[k] * rho[g]
    });
    CovMatrix::new(gram(&terms), CovLabel::BartlettAnalytic)
}

/// `A' A`, every entry an independent ordered dot product.
fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let h = a.ncols();
    DMatrix::from_fn(h, h, |g, j| a.column(g).dot(&a.column(j)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Triangular kernel `K(x) = max(0, 1 - |x|)`.
    #[default]
    Bartlett,
}

impl Kernel {
    pub fn weight(self, x: f64) -> f64 {
        match self {
            Kernel::Bartlett => (1.0 - x.abs()).max(0.0),
        }
    }
}

/// Bandwidth rules. `L` stays real-valued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum BandwidthRule {
    /// `L = m sqrt(T)`
    MSqrt(f64),
    /// `L = c T^(1/3)`
    CCubeRoot(f64),
    /// `L` fixed.
    Fixed(f64),
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule::MSqrt(1.0)
    }
}

impl BandwidthRule {
    pub fn resolve(self, t: usize) -> f64 {
        let t = t as f64;
        match self {
            BandwidthRule::MSqrt(m) => m * t.sqrt(),
            BandwidthRule::CCubeRoot(c) => c * t.cbrt(),
            BandwidthRule::Fixed(l) => l,
        }
    }

    pub fn describe(self) -> String {
        match self {
            BandwidthRule::MSqrt(1.0) => "T^(1/2)".into(),
            BandwidthRule::MSqrt(m) => format!("{m}T^(1/2)"),
            BandwidthRule::CCubeRoot(1.0) => "T^(1/3)".into(),
            BandwidthRule::CCubeRoot(c) => format!("{c}T^(1/3)"),
            BandwidthRule::Fixed(l) => format!("{l}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelBandwidth {
    pub kernel: Kernel,
    pub rule: BandwidthRule,
}

impl KernelBandwidth {
    pub fn new(kernel: Kernel, rule: BandwidthRule) -> Self {
        Self { kernel, rule }
    }

    pub fn bartlett(rule: BandwidthRule) -> Self {
        Self::new(Kernel::Bartlett, rule)
    }

    /// Resolved bandwidth for sample size `t`.
    pub fn resolve(&self, t: usize) -> Result<f64> {
        let l = self.rule.resolve(t);
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive, got {l}"
            )));
        }
        Ok(l)
    }
}

/// Mélard–Roy estimate of the Bartlett matrix for lags `1..=acf.max_lag()`.
///
/// Each `rho(j)` in Bartlett's formula is replaced by `K(j/L) rho_hat(j)` and the
/// sum runs over `k = 1..T-1`. With the triangular kernel only lags `j < L`
/// carry weight, so the sample ACF is extended just as far as needed.
pub fn melard_roy_estimate(acf: &AcfEstimate, kb: &KernelBandwidth) -> Result<CovMatrix> {
    let t = acf.t();
    if t < 4 {
        return Err(Error::InsufficientData { got: t, min: 4 });
    }
    let h = acf.max_lag();
    let l = kb.resolve(t)?;
    let max_weighted = weighted_lag_limit(kb.kernel, l, t);
    let rho = acf.rho_extended(max_weighted)?;
    // w[j] = K(j/L) rho_hat(j), zero beyond the weighted range.
    let kmax = (t - 1).min(max_weighted + h);
    let mut w = vec![0.0; kmax + h + 1];
    w[0] = kb.kernel.weight(0.0);
    for j in 1..=max_weighted {
        w[j] = kb.kernel.weight(j as f64 / l) * rho[j - 1];
    }
    let terms = DMatrix::from_fn(kmax, h, |ki, gi| {
        let (k, g) = (ki + 1, gi + 1);
        w[k + g] + w[k.abs_diff(g)] - 2.0 * w[k] * w[g]
    });
    CovMatrix::new(gram(&terms), CovLabel::MelardRoy)
}

/// Largest lag `j <= T-1` with nonzero kernel weight `K(j/L)`.
fn weighted_lag_limit(kernel: Kernel, l: f64, t: usize) -> usize {
    match kernel {
        Kernel::Bartlett => {
            let mut j = l.ceil() as usize;
            while j > 0 && kernel.weight(j as f64 / l) == 0.0 {
                j -= 1;
            }
            j.min(t - 1)
        }
    }
}

//! Equicoordinate quantiles of a centred multivariate normal.
//!
//! `q_tau(Sigma)` solves `P(max_h |V_h| / sqrt(sigma_hh) <= q) = tau` for
//! `V ~ N(0, Sigma)`. The box probability is evaluated with Genz's
//! separation-of-variables transform, integrated by independently scrambled
//! Sobol sequences with antithetic pairs; the quantile is then
//! found by Brent's method inside the bracket `[z_{(1+tau)/2}, z_{(1+tau^{1/H})/2}]`.

use crate::bartlett::{CovLabel, CovMatrix};
use crate::error::{Error, Result};
use crate::normal;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PROB_TOL: f64 = 1e-4;
pub const DEFAULT_SEED: u64 = 0x5EED;

const RANDOMIZATIONS: usize = 12;
const INITIAL_POINTS: usize = 64;
const MAX_POINTS: usize = 1 << 16;
/// Reported error is this multiple of the standard error across randomizations.
const ERROR_MULTIPLIER: f64 = 3.0;
const RIDGE_START: f64 = 1e-10;
const RIDGE_MAX: f64 = 1e-6;
const ROOT_XTOL: f64 = 1e-5;
/// Brent stops once the fixed-design gap is below this fraction of `prob_tol`.
const ROOT_FTOL: f64 = 0.1;
const ROOT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileOptions {
    /// Target absolute error of each box probability, in `[1e-6, 1e-2]`.
    pub prob_tol: f64,
    pub seed: u64,
}

impl Default for QuantileOptions {
    fn default() -> Self {
        Self {
            prob_tol: DEFAULT_PROB_TOL,
            seed: DEFAULT_SEED,
        }
    }
}

impl QuantileOptions {
    pub fn validate(&self) -> Result<()> {
        if !(1e-6..=1e-2).contains(&self.prob_tol) {
            return Err(Error::InvalidInput(format!(
                "prob_tol {} outside [1e-6, 1e-2]",
                self.prob_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QuantileRequest {
    pub sigma: CovMatrix,
    pub tau: f64,
    pub options: QuantileOptions,
}

impl QuantileRequest {
    pub fn new(sigma: CovMatrix, tau: f64) -> Self {
        Self {
            sigma,
            tau,
            options: QuantileOptions::default(),
        }
    }
}

/// Box probability estimate with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectProb {
    pub value: f64,
    pub error: f64,
    /// Points per randomization used for the estimate.
    pub points: usize,
}

/// Correlation matrix `D^{-1/2} Sigma D^{-1/2}`.
pub fn standardize(sigma: &CovMatrix) -> Result<CovMatrix> {
    let n = sigma.dim();
    let sd: Vec<f64> = sigma.diagonal().into_iter().map(f64::sqrt).collect();
    if let Some(i) = sd.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::ZeroVariance(i));
    }
    let r = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            sigma.get(i, j) / (sd[i] * sd[j])
        }
    });
    CovMatrix::new(r, CovLabel::Correlation)
}

/// `z_{(1+tau^{1/H})/2}`, the equicoordinate quantile under independence.
pub fn sidak_quantile(tau: f64, h: usize) -> f64 {
    normal::quantile((1.0 + tau.powf(1.0 / h as f64)) / 2.0)
}

/// `z_{1-alpha/(2H)}`.
pub fn bonferroni_quantile(alpha: f64, h: usize) -> f64 {
    normal::quantile(1.0 - alpha / (2.0 * h as f64))
}

/// Lower-triangular factor of a correlation matrix with rows and columns
/// permuted so that the largest remaining conditional variance comes first.
#[derive(Debug, Clone)]
struct BoxFactor {
    /// Row-major lower triangle, `n x n`.
    l: Vec<f64>,
    n: usize,
}

impl BoxFactor {
    fn new(r: &CovMatrix) -> Result<Self> {
        if let Some(f) = Self::pivoted_cholesky(r.matrix(), 0.0) {
            return Ok(f);
        }
        let mut ridge = RIDGE_START;
        while ridge <= RIDGE_MAX * (1.0 + 1e-12) {
            if let Some(f) = Self::pivoted_cholesky(r.matrix(), ridge) {
                return Ok(f);
            }
            ridge *= 10.0;
        }
        Err(Error::NumericalBreakdown(
            "correlation matrix is not positive definite even with a 1e-6 ridge".into(),
        ))
    }

    fn pivoted_cholesky(r: &DMatrix<f64>, ridge: f64) -> Option<Self> {
        let n = r.nrows();
        let mut a = DMatrix::from_fn(n, n, |i, j| r[(i, j)] + if i == j { ridge } else { 0.0 });
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            // remaining conditional variances
            let mut best = i;
            let mut best_var = f64::NEG_INFINITY;
            for j in i..n {
                let v = a[(j, j)] - (0..i).map(|m| l[j * n + m] * l[j * n + m]).sum::<f64>();
                if v > best_var {
                    best_var = v;
                    best = j;
                }
            }
            if !(best_var > 1e-14) {
                return None;
            }
            if best != i {
                a.swap_rows(i, best);
                a.swap_columns(i, best);
                for m in 0..i {
                    l.swap(i * n + m, best * n + m);
                }
            }
            let d = best_var.sqrt();
            l[i * n + i] = d;
            for j in i + 1..n {
                let s = a[(j, i)] - (0..i).map(|m| l[j * n + m] * l[i * n + m]).sum::<f64>();
                l[j * n + i] = s / d;
            }
        }
        Some(Self { l, n })
    }

    /// Genz integrand at `K` points of `[0,1]^(n-1)` evaluated in lockstep,
    /// which lets the independent dependency chains overlap.
    #[inline]
    fn integrand<const K: usize>(&self, q: f64, w: [&[f64]; K], y: &mut [[f64; K]]) -> [f64; K] {
        let n = self.n;
        let l = &self.l;
        let e0 = normal::cdf(q / l[0]);
        let mut d = [1.0 - e0; K];
        let mut e = [e0; K];
        let mut f = [e0 - (1.0 - e0); K];
        for i in 1..n {
            let row = &l[i * n..i * n + i];
            let lii = l[i * n + i];
            for k in 0..K {
                let u = (d[k] + w[k][i - 1] * (e[k] - d[k])).clamp(1e-16, 1.0 - 1e-16);
                y[i - 1][k] = normal::quantile(u);
            }
            let mut mu = [0.0; K];
            for (a, yj) in row.iter().zip(&y[..i]) {
                for k in 0..K {
                    mu[k] += a * yj[k];
                }
            }
            for k in 0..K {
                d[k] = normal::cdf((-q - mu[k]) / lii);
                e[k] = normal::cdf((q - mu[k]) / lii);
                f[k] *= e[k] - d[k];
            }
        }
        f
    }
}

/// Fixed integration design: one Owen-scrambled Sobol sequence per
/// randomization, cached point sets, and the number of points in use. For a
/// fixed design the estimate is a smooth deterministic function of `q`.
#[derive(Debug, Clone)]
struct Design {
    dim: usize,
    seeds: Vec<u32>,
    /// Row-major `points x dim` per randomization.
    cache: Vec<Vec<f64>>,
    points: usize,
}

impl Design {
    fn new(dim: usize, seed: u64) -> Self {
        let seeds = (0..RANDOMIZATIONS)
            .map(|m| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(m as u64);
                rng.random::<u32>()
            })
            .collect();
        Self {
            dim,
            seeds,
            cache: vec![Vec::new(); RANDOMIZATIONS],
            points: 0,
        }
    }

    fn grow(&mut self, n: usize) {
        let dim = self.dim;
        self.cache
            .par_iter_mut()
            .zip(&self.seeds)
            .for_each(|(c, &seed)| {
                let have = c.len() / dim;
                c.reserve((n - have.min(n)) * dim);
                for i in have..n {
                    c.extend(
                        (0..dim).map(|j| sobol_burley::sample(i as u32, j as u32, seed) as f64),
                    );
                }
            });
        self.points = n;
    }

    fn partial_sum(&self, f: &BoxFactor, q: f64, pts: &[f64], from: usize, to: usize) -> f64 {
        let dim = self.dim;
        let mut wa = vec![0.0; 2 * dim];
        let mut y = vec![[0.0; 4]; dim + 1];
        let mut s = 0.0;
        // `from` and `to` are powers of two (or zero), so points come in pairs
        for w in pts[from * dim..to * dim].chunks_exact(2 * dim) {
            for (a, x) in wa.iter_mut().zip(w) {
                *a = 1.0 - x;
            }
            let v = f.integrand(q, [&w[..dim], &w[dim..], &wa[..dim], &wa[dim..]], &mut y);
            s += 0.5 * (v[0] + v[1] + v[2] + v[3]);
        }
        s
    }

    fn estimate(&self, f: &BoxFactor, q: f64) -> RectProb {
        let sums: Vec<f64> = self
            .cache
            .par_iter()
            .map(|c| self.partial_sum(f, q, c, 0, self.points))
            .collect();
        summarize(&sums, self.points)
    }

    /// Doubles the number of points until the error estimate at `q` is within
    /// `tol` (or the point cap is reached).
    fn calibrate(&mut self, f: &BoxFactor, q: f64, tol: f64) -> RectProb {
        let mut sums = vec![0.0; RANDOMIZATIONS];
        let mut done = 0;
        let mut n = self.points.max(INITIAL_POINTS);
        loop {
            self.grow(n);
            let this = &*self;
            sums.par_iter_mut().zip(&this.cache).for_each(|(s, c)| {
                *s += this.partial_sum(f, q, c, done, n);
            });
            done = n;
            let est = summarize(&sums, n);
            if est.error <= tol || n >= MAX_POINTS {
                return est;
            }
            n *= 2;
        }
    }
}

fn summarize(sums: &[f64], points: usize) -> RectProb {
    let m = sums.len() as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / points as f64).collect();
    let mean = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    RectProb {
        value: mean.clamp(0.0, 1.0),
        error: ERROR_MULTIPLIER * (var / m).sqrt(),
        points,
    }
}

fn check_correlation(r: &CovMatrix) -> Result<()> {
    for (i, d) in r.diagonal().into_iter().enumerate() {
        if (d - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "diagonal entry {i} of a correlation matrix is {d}"
            )));
        }
    }
    Ok(())
}

/// `P(|V_1| <= q, ..., |V_H| <= q)` for `V ~ N(0, R)` with estimated absolute
/// error at most `prob_tol` (unless the point cap is hit). Deterministic for a
/// fixed seed.
pub fn central_rect_prob(r: &CovMatrix, q: f64, prob_tol: f64, seed: u64) -> Result<RectProb> {
    QuantileOptions { prob_tol, seed }.validate()?;
    check_correlation(r)?;
    if !(q > 0.0) {
        return Err(Error::InvalidInput(format!(
            "box half-width must be positive, got {q}"
        )));
    }
    let factor = BoxFactor::new(r)?;
    if r.dim() == 1 {
        return Ok(RectProb {
            value: 2.0 * normal::cdf(q) - 1.0,
            error: 0.0,
            points: 0,
        });
    }
    let mut design = Design::new(r.dim() - 1, seed);
    Ok(design.calibrate(&factor, q, prob_tol))
}

/// Equicoordinate quantile `q_tau(Sigma)`.
pub fn equicoordinate_quantile(req: &QuantileRequest) -> Result<f64> {
    let QuantileRequest {
        sigma,
        tau,
        options,
    } = req;
    let tau = *tau;
    options.validate()?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidInput(format!("tau {tau} outside (0, 1)")));
    }
    let r = standardize(sigma)?;
    let h = r.dim();
    let lo = normal::quantile((1.0 + tau) / 2.0);
    let hi = sidak_quantile(tau, h);
    if h == 1 || r.is_identity() {
        return Ok(hi);
    }
    let factor = BoxFactor::new(&r)?;
    let mut design = Design::new(h - 1, options.seed);
    let at_hi = design.calibrate(&factor, hi, options.prob_tol);
    let ftol = ROOT_FTOL * options.prob_tol;
    let (mut q, err) = solve_on_design(&design, &factor, tau, lo, hi, at_hi.value, ftol)?;
    // The error is checked where it matters; refine the design once if needed.
    if err > options.prob_tol && design.points < MAX_POINTS {
        design.calibrate(&factor, q, options.prob_tol);
        let fhi = design.estimate(&factor, hi).value;
        q = solve_on_design(&design, &factor, tau, lo, hi, fhi, ftol)?.0;
    }
    Ok(q)
}

/// Root of the fixed-design box probability minus `tau`, with the error
/// estimate at the returned point.
fn solve_on_design(
    design: &Design,
    factor: &BoxFactor,
    tau: f64,
    lo: f64,
    hi: f64,
    p_hi: f64,
    ftol: f64,
) -> Result<(f64, f64)> {
    let last_err = std::cell::Cell::new(0.0);
    let f = |q: f64| {
        let est = design.estimate(factor, q);
        last_err.set(est.error);
        est.value - tau
    };
    let fhi = p_hi - tau;
    if fhi <= 0.0 {
        return Ok((hi, 0.0));
    }
    let flo = f(lo);
    if flo >= 0.0 {
        return Ok((lo, last_err.get()));
    }
    let q = brent(f, lo, hi, flo, fhi, ROOT_XTOL, ftol, ROOT_MAX_ITER)?;
    Ok((q, last_err.get()))
}

/// Brent's method on a sign-changing bracket.
#[allow(clippy::too_many_arguments)]
fn brent(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut qq) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0)),
                    (qa - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                qq = -qq;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * qq - (tol * qq).abs()).min((e * qq).abs()) {
                e = d;
                d = p / qq;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equi(h: usize, rho: f64) -> CovMatrix {
        CovMatrix::new(
            DMatrix::from_fn(h, h, |i, j| if i == j { 1.0 } else { rho }),
            CovLabel::Custom,
        )
        .unwrap()
    }

    #[test]
    fn standardize_examples() {
        let s = CovMatrix::new(DMatrix::identity(3, 3) * 4.0, CovLabel::Custom).unwrap();
        assert!(standardize(&s).unwrap().is_identity());
        let s = CovMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 4.0]], CovLabel::Custom).unwrap();
        let r = standardize(&s).unwrap();
        assert_eq!(r.get(0, 1), 0.25);
        assert_eq!(r.get(1, 1), 1.0);
        let s = CovMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]], CovLabel::Custom).unwrap();
        assert!(matches!(standardize(&s), Err(Error::ZeroVariance(1))));
    }

    #[test]
    fn closed_form_quantiles() {
        assert!((sidak_quantile(0.9, 1) - 1.644854).abs() < 1e-6);
        assert!((bonferroni_quantile(0.1, 1) - 1.644854).abs() < 1e-6);
        assert_eq!(sidak_quantile(0.9, 1), bonferroni_quantile(0.1, 1));
        assert!((bonferroni_quantile(0.1, 10) - normal::quantile(0.995)).abs() < 1e-12);
        assert!((sidak_quantile(0.9, 25) - 2.864).abs() < 2e-3);
    }

    #[test]
    fn independent_box_is_a_product() {
        for h in [1, 2, 5, 12] {
            for q in [0.5, 1.959964, 2.8] {
                let p = central_rect_prob(&CovMatrix::identity(h), q, 1e-4, 1).unwrap();
                let want = (2.0 * normal::cdf(q) - 1.0).powi(h as i32);
                assert!((p.value - want).abs() <= 1e-4, "h={h} q={q}");
            }
        }
        let p = central_rect_prob(&CovMatrix::identity(2), 1.959964, 1e-4, 1).unwrap();
        assert!((p.value - 0.9025).abs() < 1e-4);
        let p = central_rect_prob(&CovMatrix::identity(1), 1.644854, 1e-4, 1).unwrap();
        assert!((p.value - 0.9).abs() < 1e-6);
    }

    #[test]
    fn bivariate_against_known_value() {
        // P(|X|<=1, |Y|<=1) with correlation 0.5 is 0.4979718 (four-corner
        // bivariate normal CDF evaluation).
        let p = central_rect_prob(&equi(2, 0.5), 1.0, 1e-5, 3).unwrap();
        assert!((p.value - 0.497_971_777_839).abs() < 1e-4, "{}", p.value);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let r = equi(6, 0.3);
        let a = central_rect_prob(&r, 2.0, 1e-4, 11).unwrap();
        let b = central_rect_prob(&r, 2.0, 1e-4, 11).unwrap();
        assert_eq!(a, b);
        let req = QuantileRequest::new(r, 0.9);
        assert_eq!(
            equicoordinate_quantile(&req).unwrap().to_bits(),
            equicoordinate_quantile(&req).unwrap().to_bits()
        );
    }

    #[test]
    fn identity_quantiles() {
        let q =
            equicoordinate_quantile(&QuantileRequest::new(CovMatrix::identity(1), 0.9)).unwrap();
        assert!((q - 1.644854).abs() < 1e-3);
        let q =
            equicoordinate_quantile(&QuantileRequest::new(CovMatrix::identity(10), 0.9)).unwrap();
        assert!((q - 2.560).abs() < 2e-3);
    }

    #[test]
    fn perfectly_correlated_pair_collapses_to_univariate() {
        // Singular correlation: the ridge makes it factorable and the
        // quantile is essentially z_{0.95}.
        let r = equi(2, 1.0);
        let q = equicoordinate_quantile(&QuantileRequest::new(r, 0.9)).unwrap();
        assert!((q - 1.644854).abs() < 2e-3, "{q}");
    }

    #[test]
    fn rejects_bad_requests() {
        let mut req = QuantileRequest::new(CovMatrix::identity(3), 1.0);
        assert!(equicoordinate_quantile(&req).is_err());
        req.tau = 0.9;
        req.options.prob_tol = 0.5;
        assert!(equicoordinate_quantile(&req).is_err());
        assert!(central_rect_prob(&CovMatrix::identity(2), -1.0, 1e-4, 0).is_err());
        let not_corr = CovMatrix::new(DMatrix::identity(2, 2) * 2.0, CovLabel::Custom).unwrap();
        assert!(central_rect_prob(&not_corr, 1.0, 1e-4, 0).is_err());
    }

    #[test]
    fn indefinite_matrix_breaks_down() {
        let r = CovMatrix::from_rows(
            &[
                vec![1.0, 0.9, -0.9],
                vec![0.9, 1.0, 0.9],
                vec![-0.9, 0.9, 1.0],
            ],
            CovLabel::Custom,
        )
        .unwrap();
        assert!(matches!(
            central_rect_prob(&r, 1.0, 1e-4, 0),
            Err(Error::NumericalBreakdown(_))
        ));
    }
}

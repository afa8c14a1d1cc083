//! Least-squares regressions with an intercept, residual autocorrelations and
//! the covariance of residual autocorrelations in dynamic regressions.

use crate::acf::AcfEstimate;
use crate::bands::{check_params, significance_band_simultaneous, Band, BandKind};
use crate::bartlett::{CovLabel, CovMatrix};
use crate::error::{Error, Result};
use crate::quantile::{equicoordinate_quantile, QuantileOptions, QuantileRequest};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

const RANK_TOL: f64 = 1e-10;
const PD_TOL: f64 = 1e-12;
/// Residual variance below this fraction of the variance of `y` is a perfect fit.
const PERFECT_FIT: f64 = 1e-20;

/// Response `y` and regressors `X` (`T x K`, intercept excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    y: Vec<f64>,
    x: DMatrix<f64>,
}

impl RegressionData {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                found: x.nrows(),
            });
        }
        let (t, k) = (y.len(), x.ncols());
        if t <= k + 1 {
            return Err(Error::Degenerate {
                got: t,
                needed: k + 1,
            });
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "non-finite value in regression data".into(),
            ));
        }
        Ok(Self { y, x })
    }

    /// Builds the design from regressor columns.
    pub fn from_columns(y: Vec<f64>, columns: &[Vec<f64>]) -> Result<Self> {
        let t = y.len();
        if let Some(c) = columns.iter().find(|c| c.len() != t) {
            return Err(Error::DimensionMismatch {
                expected: t,
                found: c.len(),
            });
        }
        let x = DMatrix::from_fn(t, columns.len(), |i, j| columns[j][i]);
        Self::new(y, x)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn t(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(1/T) sum (x_t - xbar)(x_t - xbar)'`.
    pub sigma_x: DMatrix<f64>,
    /// `(1/T) sum e_t^2`.
    pub sigma2_eps: f64,
    x: DMatrix<f64>,
    x_mean: Vec<f64>,
    y_var: f64,
}

impl OlsFit {
    pub fn t(&self) -> usize {
        self.residuals.len()
    }

    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.x
    }

    #[cfg(test)]
    pub(crate) fn with_residuals(&self, residuals: Vec<f64>) -> Self {
        Self {
            residuals,
            ..self.clone()
        }
    }

    fn perfect_fit(&self) -> bool {
        !(self.sigma2_eps > PERFECT_FIT * self.y_var)
    }
}

/// OLS with an intercept via column-pivoted QR.
pub fn ols_fit(data: &RegressionData) -> Result<OlsFit> {
    let (t, k) = (data.t(), data.k());
    let a = DMatrix::from_fn(
        t,
        k + 1,
        |i, j| if j == 0 { 1.0 } else { data.x[(i, j - 1)] },
    );
    let y = DVector::from_column_slice(&data.y);
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let r0 = r[(0, 0)].abs();
    if (0..=k).any(|i| !(r[(i, i)].abs() > RANK_TOL * r0)) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &y;
    let mut beta = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    qr.p().inv_permute_rows(&mut beta);
    let fitted = &a * &beta;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();

    let tf = t as f64;
    let x_mean: Vec<f64> = (0..k).map(|j| data.x.column(j).sum() / tf).collect();
    let centred = DMatrix::from_fn(t, k, |i, j| data.x[(i, j)] - x_mean[j]);
    let sigma_x = (centred.transpose() * &centred) / tf;
    let sigma2_eps = residuals.iter().map(|e| e * e).sum::<f64>() / tf;
    let y_mean = data.y.iter().sum::<f64>() / tf;
    let y_var = data.y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / tf;
    Ok(OlsFit {
        intercept: beta[0],
        coeffs: beta.iter().skip(1).copied().collect(),
        residuals,
        sigma_x: symmetrize(sigma_x),
        sigma2_eps,
        x: data.x.clone(),
        x_mean,
        y_var,
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Residual autocorrelations `sum e_t e_{t-h} / sum e_t^2`, without removing
/// the residual mean again.
pub fn residual_acf(fit: &OlsFit, max_lag: usize) -> Result<AcfEstimate> {
    if fit.perfect_fit() {
        return Err(Error::DegenerateSeries);
    }
    AcfEstimate::from_deviations(fit.residuals.clone(), 0.0, max_lag)
}

/// Whether `x_t` in the lagged cross moments is centred first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaCentering {
    /// `x_t` as observed.
    #[default]
    Raw,
    Demeaned,
}

/// `Gamma_hat` with row `h` equal to `(1/T) sum_{t=h+1}^T x_t e_{t-h}`.
pub fn estimate_gamma_hat(fit: &OlsFit, max_lag: usize) -> Result<DMatrix<f64>> {
    estimate_gamma_hat_with(fit, max_lag, GammaCentering::Raw)
}

pub fn estimate_gamma_hat_with(
    fit: &OlsFit,
    max_lag: usize,
    centering: GammaCentering,
) -> Result<DMatrix<f64>> {
    let t = fit.t();
    if max_lag == 0 || max_lag >= t {
        return Err(Error::InvalidLag {
            lag: max_lag,
            max: t - 1,
        });
    }
    let k = fit.k();
    let e = &fit.residuals;
    let shift: Vec<f64> = match centering {
        GammaCentering::Raw => vec![0.0; k],
        GammaCentering::Demeaned => fit.x_mean.clone(),
    };
    Ok(DMatrix::from_fn(max_lag, k, |hi, j| {
        let h = hi + 1;
        (h..t)
            .map(|s| (fit.x[(s, j)] - shift[j]) * e[s - h])
            .sum::<f64>()
            / t as f64
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Conditionally homoskedastic errors.
    #[default]
    Hom,
    /// Eicker–White type.
    Het,
}

/// Plug-in estimate of the asymptotic covariance of `sqrt(T) rho_hat_e`.
/// Symmetric but not necessarily positive semidefinite.
pub fn sigma_rho_plugin(fit: &OlsFit, max_lag: usize, mode: SigmaMode) -> Result<CovMatrix> {
    let gamma = estimate_gamma_hat(fit, max_lag)?;
    sigma_rho_from_gamma(fit, &gamma, mode)
}

pub(crate) fn sigma_rho_from_gamma(
    fit: &OlsFit,
    gamma: &DMatrix<f64>,
    mode: SigmaMode,
) -> Result<CovMatrix> {
    let h = gamma.nrows();
    let label = match mode {
        SigmaMode::Hom => CovLabel::SigmaRhoHom,
        SigmaMode::Het => CovLabel::SigmaRhoHet,
    };
    if fit.k() == 0 {
        return Ok(CovMatrix::identity(h).with_label(label));
    }
    if fit.perfect_fit() {
        return Err(Error::DegenerateSeries);
    }
    let s2 = fit.sigma2_eps;
    let chol = fit
        .sigma_x
        .clone()
        .cholesky()
        .ok_or(Error::SingularSigmaX)?;
    // m = Gamma Sigma_x^{-1}
    let m = chol.solve(&gamma.transpose()).transpose();
    let corr = &m * gamma.transpose();
    let mut out = DMatrix::identity(h, h);
    match mode {
        SigmaMode::Hom => out -= corr / s2,
        SigmaMode::Het => {
            let sxe = sigma_x_eps(fit);
            if sxe.clone().cholesky().is_none() {
                return Err(Error::SingularSigmaX);
            }
            out -= corr * (2.0 / s2);
            out += &m * sxe * m.transpose() / (s2 * s2);
        }
    }
    CovMatrix::new(symmetrize(out), label)
}

/// `(1/T) sum e_t^2 (x_t - xbar)(x_t - xbar)'`.
fn sigma_x_eps(fit: &OlsFit) -> DMatrix<f64> {
    let (t, k) = (fit.t(), fit.k());
    let mut out = DMatrix::zeros(k, k);
    for s in 0..t {
        let d = DVector::from_fn(k, |j, _| fit.x[(s, j)] - fit.x_mean[j]);
        out += (&d * d.transpose()) * fit.residuals[s].powi(2);
    }
    symmetrize(out / t as f64)
}

#[derive(Debug, Clone)]
pub struct SigmaRhoEstimate {
    pub raw: CovMatrix,
    pub shrunk: CovMatrix,
    pub mode: SigmaMode,
    /// First leading block size that is not positive definite (`H + 1` if none).
    pub k_star: usize,
}

/// Keeps the largest positive definite leading block of `raw` and fills the
/// rest with the identity.
pub fn shrink_sigma_rho(raw: &CovMatrix) -> SigmaRhoEstimate {
    let h = raw.dim();
    let m = raw.matrix();
    let tol = PD_TOL * (m.trace() / h as f64).max(1.0);
    let mut k_star = h + 1;
    for k in 1..=h {
        let block = m.view((0, 0), (k, k)).into_owned();
        let eig = block.symmetric_eigenvalues();
        if !eig.iter().all(|v| *v > tol) {
            k_star = k;
            break;
        }
    }
    let keep = k_star - 1;
    let shrunk = DMatrix::from_fn(h, h, |i, j| {
        if i < keep && j < keep {
            m[(i, j)]
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    let mode = match raw.label() {
        CovLabel::SigmaRhoHet => SigmaMode::Het,
        _ => SigmaMode::Hom,
    };
    SigmaRhoEstimate {
        raw: raw.clone(),
        shrunk: CovMatrix::new(shrunk, raw.label()).expect("embedding keeps symmetry"),
        mode,
        k_star,
    }
}

/// Exact (`naive = false`) or naive significance band for residual
/// autocorrelations of a dynamic regression.
pub fn significance_band_dynamic(
    fit: &OlsFit,
    max_lag: usize,
    alpha: f64,
    mode: SigmaMode,
    naive: bool,
    opts: &QuantileOptions,
) -> Result<Band> {
    let t = fit.t();
    check_params(t, max_lag, alpha)?;
    if naive {
        let mut b = significance_band_simultaneous(t, max_lag, alpha)?;
        b.kind = BandKind::SigDynamicNaive;
        return Ok(b);
    }
    let est = shrink_sigma_rho(&sigma_rho_plugin(fit, max_lag, mode)?);
    exact_band(&est, t, alpha, opts)
}

/// Exact band from an already shrunk estimate.
pub fn exact_band(
    est: &SigmaRhoEstimate,
    t: usize,
    alpha: f64,
    opts: &QuantileOptions,
) -> Result<Band> {
    let h = est.shrunk.dim();
    check_params(t, h, alpha)?;
    let q = equicoordinate_quantile(&QuantileRequest {
        sigma: est.shrunk.clone(),
        tau: 1.0 - alpha,
        options: *opts,
    })?;
    Ok(Band::around_zero(
        BandKind::SigDynamicExact,
        t,
        alpha,
        q,
        &est.shrunk.diagonal(),
    ))
}

/// Regression of `y` (or its first difference) on `p` own lags and on lags
/// `0..=r` of each exogenous series, with pre-sample values consumed.
///
/// Columns are ordered `[y_{t-1}, ..., y_{t-p}]` followed by
/// `[x_t, ..., x_{t-r}]` for each exogenous series in turn.
pub fn lagged_design(
    y: &[f64],
    exog: &[Vec<f64>],
    p: usize,
    r: usize,
    differenced: bool,
) -> Result<RegressionData> {
    let n = y.len();
    if let Some(x) = exog.iter().find(|x| x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let d = usize::from(differenced);
    // dependent series on the original time index; undefined before `d`
    let z = |t: usize| if differenced { y[t] - y[t - 1] } else { y[t] };
    let start = (p + d).max(if exog.is_empty() { 0 } else { r });
    let k = p + exog.len() * (r + 1);
    if n <= start || n - start <= k + 1 {
        return Err(Error::InsufficientLength {
            len: n,
            needed: start + k + 1,
        });
    }
    let rows = start..n;
    let resp: Vec<f64> = rows.clone().map(z).collect();
    let mut cols: Vec<Vec<f64>> = (1..=p)
        .map(|i| rows.clone().map(|t| z(t - i)).collect())
        .collect();
    for x in exog {
        cols.extend((0..=r).map(|j| rows.clone().map(|t| x[t - j]).collect()));
    }
    RegressionData::from_columns(resp, &cols)
}

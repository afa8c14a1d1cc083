//! Sample moments of a univariate series: mean, autocovariances and
//! autocorrelations with the divisor-`T` estimator.

use crate::error::{Error, Result};

/// A complete, finite, real-valued series of length at least two.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InsufficientData {
                got: values.len(),
                min: 2,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at position {i}"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sample autocovariances `gamma[0..=H]` and autocorrelations `rho[h-1] = rho(h)`
/// for `h = 1..=H`.
///
/// The deviations the estimate was built from are kept so that higher lags can
/// be produced on demand (the Mélard–Roy estimator sums over lags beyond `H`).
#[derive(Debug, Clone)]
pub struct AcfEstimate {
    mean: f64,
    gamma: Vec<f64>,
    rho: Vec<f64>,
    t: usize,
    deviations: Option<Vec<f64>>,
}

impl AcfEstimate {
    /// Builds an estimate from already computed autocorrelations, without the
    /// underlying data. `rho[h-1]` is the lag-`h` autocorrelation; `gamma` is
    /// set to `rho` scaled by `gamma0`.
    pub fn from_rho(t: usize, mean: f64, gamma0: f64, rho: Vec<f64>) -> Result<Self> {
        if !(gamma0 > 0.0) {
            return Err(Error::DegenerateSeries);
        }
        if rho.is_empty() || rho.len() > t.saturating_sub(1) {
            return Err(Error::InvalidLag {
                lag: rho.len(),
                max: t.saturating_sub(1),
            });
        }
        let mut gamma = Vec::with_capacity(rho.len() + 1);
        gamma.push(gamma0);
        gamma.extend(rho.iter().map(|r| r * gamma0));
        Ok(Self {
            mean,
            gamma,
            rho,
            t,
            deviations: None,
        })
    }

    /// Autocorrelations of an already centred sequence (no further mean
    /// removal); `mean` is recorded as given.
    pub(crate) fn from_deviations(deviations: Vec<f64>, mean: f64, max_lag: usize) -> Result<Self> {
        let t = deviations.len();
        if max_lag == 0 || max_lag + 1 > t {
            return Err(Error::InvalidLag {
                lag: max_lag,
                max: t.saturating_sub(1),
            });
        }
        let gamma: Vec<f64> = (0..=max_lag).map(|h| autocov(&deviations, h)).collect();
        if !(gamma[0] > 0.0) {
            return Err(Error::DegenerateSeries);
        }
        let rho = gamma[1..].iter().map(|g| g / gamma[0]).collect();
        Ok(Self {
            mean,
            gamma,
            rho,
            t,
            deviations: Some(deviations),
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Autocovariances for lags `0..=H`.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Autocorrelations for lags `1..=H`.
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Sample size `T`.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Maximum lag `H`.
    pub fn max_lag(&self) -> usize {
        self.rho.len()
    }

    /// Autocorrelations for lags `1..=lag`, recomputed from the stored data
    /// when `lag` exceeds `H`. Lags at or beyond `T` are zero.
    pub fn rho_extended(&self, lag: usize) -> Result<Vec<f64>> {
        if lag <= self.rho.len() {
            return Ok(self.rho[..lag].to_vec());
        }
        let avail = lag.min(self.t - 1);
        let mut out = self.rho.clone();
        if avail > self.rho.len() {
            let dev = self.deviations.as_ref().ok_or(Error::InvalidLag {
                lag,
                max: self.rho.len(),
            })?;
            let g0 = self.gamma[0];
            out.extend((self.rho.len() + 1..=avail).map(|h| autocov(dev, h) / g0));
        }
        out.resize(lag, 0.0);
        Ok(out)
    }
}

fn autocov(dev: &[f64], h: usize) -> f64 {
    let t = dev.len();
    let s: f64 = dev[..t - h].iter().zip(&dev[h..]).map(|(a, b)| a * b).sum();
    s / t as f64
}

/// Sample ACF up to lag `max_lag`, mean removed once and divisor `T` at every lag.
pub fn compute_acf(series: &TimeSeries, max_lag: usize) -> Result<AcfEstimate> {
    let t = series.len();
    if max_lag == 0 || max_lag > t - 1 {
        return Err(Error::InvalidLag {
            lag: max_lag,
            max: t - 1,
        });
    }
    let mean = series.values.iter().sum::<f64>() / t as f64;
    let dev: Vec<f64> = series.values.iter().map(|y| y - mean).collect();
    AcfEstimate::from_deviations(dev, mean, max_lag)
}

/// Default maximum lag `floor(10 log10 T)`, capped at `T - 1` and at least 1.
pub fn default_max_lag(t: usize) -> usize {
    let h = (10.0 * (t as f64).log10()).floor() as usize;
    h.clamp(1, t.saturating_sub(1).max(1))
}

/// Autocorrelations `(phi, phi^2, ..., phi^H)` of a stationary AR(1).
pub fn true_acf_ar1(phi: f64, max_lag: usize) -> Result<Vec<f64>> {
    if !(phi.abs() < 1.0) {
        return Err(Error::NonStationary(format!("AR(1) coefficient {phi}")));
    }
    Ok((1..=max_lag as i32).map(|h| phi.powi(h)).collect())
}

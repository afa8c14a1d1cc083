//! Portmanteau and LM tests for serial correlation.

use crate::acf::AcfEstimate;
use crate::error::{Error, Result};
use crate::regression::{ols_fit, OlsFit, RegressionData};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    BoxPierce,
    LjungBox,
    BreuschGodfrey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub name: TestName,
    pub statistic: f64,
    pub df: usize,
    pub pvalue: f64,
    /// Set when the auxiliary regression has too few observations; the test
    /// then reports `statistic = 0` and `pvalue = 1`.
    #[serde(default)]
    pub degenerate: bool,
}

impl TestResult {
    fn new(name: TestName, statistic: f64, df: usize) -> Self {
        Self {
            name,
            statistic,
            df,
            pvalue: chi2_upper(statistic, df),
            degenerate: false,
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.pvalue < alpha
    }
}

/// `P(X > x)` for `X ~ chi^2(df)`.
pub fn chi2_upper(x: f64, df: usize) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let d = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    d.sf(x).clamp(0.0, 1.0)
}

fn leading_rho(acf: &AcfEstimate, h: usize) -> Result<&[f64]> {
    if h == 0 || h > acf.max_lag() {
        return Err(Error::InvalidLag {
            lag: h,
            max: acf.max_lag(),
        });
    }
    Ok(&acf.rho()[..h])
}

/// `Q = T sum_{h<=H} rho_hat(h)^2` on `H` degrees of freedom.
pub fn box_pierce(acf: &AcfEstimate, h: usize) -> Result<TestResult> {
    let rho = leading_rho(acf, h)?;
    let q = acf.t() as f64 * rho.iter().map(|r| r * r).sum::<f64>();
    Ok(TestResult::new(TestName::BoxPierce, q, h))
}

/// `Q* = T(T+2) sum_{h<=H} rho_hat(h)^2 / (T-h)` on `H` degrees of freedom.
pub fn ljung_box(acf: &AcfEstimate, h: usize) -> Result<TestResult> {
    let rho = leading_rho(acf, h)?;
    let t = acf.t() as f64;
    let s: f64 = rho
        .iter()
        .enumerate()
        .map(|(i, r)| r * r / (t - (i + 1) as f64))
        .sum();
    Ok(TestResult::new(TestName::LjungBox, t * (t + 2.0) * s, h))
}

/// LM test: `T R^2` from regressing the residuals on the original regressors
/// and `H` of their own lags, pre-sample lags set to zero.
pub fn breusch_godfrey(fit: &OlsFit, data: &RegressionData, h: usize) -> Result<TestResult> {
    let (t, k) = (data.t(), data.k());
    if fit.t() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: fit.t(),
        });
    }
    if h == 0 {
        return Err(Error::InvalidLag { lag: 0, max: t - 1 });
    }
    if t <= h || t - h <= k + h + 1 {
        return Ok(TestResult {
            name: TestName::BreuschGodfrey,
            statistic: 0.0,
            df: h,
            pvalue: 1.0,
            degenerate: true,
        });
    }
    let e = &fit.residuals;
    let mean = e.iter().sum::<f64>() / t as f64;
    let sst: f64 = e.iter().map(|v| (v - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return Ok(TestResult::new(TestName::BreuschGodfrey, 0.0, h));
    }
    let x = data.x();
    let aux_x = DMatrix::from_fn(t, k + h, |i, j| {
        if j < k {
            x[(i, j)]
        } else {
            let lag = j - k + 1;
            if i >= lag {
                e[i - lag]
            } else {
                0.0
            }
        }
    });
    let aux = ols_fit(&RegressionData::new(e.clone(), aux_x)?)?;
    let ssr: f64 = aux.residuals.iter().map(|v| v * v).sum();
    let r2 = (1.0 - ssr / sst).clamp(0.0, 1.0);
    Ok(TestResult::new(TestName::BreuschGodfrey, t as f64 * r2, h))
}

//! Significance and confidence bands for autocorrelations.
//!
//! Every band is a set of closed per-lag intervals. Significance bands are
//! centred at zero and test white noise; confidence bands are centred at the
//! sample autocorrelations and cover the whole function up to lag `H`.

use crate::acf::AcfEstimate;
use crate::bartlett::CovMatrix;
use crate::error::{Error, Result};
use crate::normal;
use crate::quantile::{equicoordinate_quantile, sidak_quantile, QuantileOptions, QuantileRequest};
use serde::{Deserialize, Serialize};

/// Variances below this are floored before taking square roots.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    SigSimultaneous,
    SigPointwise,
    ConfSupt,
    ConfBonferroni,
    ConfPointwise,
    SigDynamicExact,
    SigDynamicNaive,
}

impl BandKind {
    pub fn is_significance(self) -> bool {
        matches!(
            self,
            Self::SigSimultaneous
                | Self::SigPointwise
                | Self::SigDynamicExact
                | Self::SigDynamicNaive
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SigSimultaneous => "sig_simultaneous",
            Self::SigPointwise => "sig_pointwise",
            Self::ConfSupt => "conf_supt",
            Self::ConfBonferroni => "conf_bonferroni",
            Self::ConfPointwise => "conf_pointwise",
            Self::SigDynamicExact => "sig_dynamic_exact",
            Self::SigDynamicNaive => "sig_dynamic_naive",
        }
    }
}

impl std::fmt::Display for BandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Critical value used by a confidence band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceKind {
    Supt,
    Bonferroni,
    Pointwise,
}

impl ConfidenceKind {
    pub fn band_kind(self) -> BandKind {
        match self {
            Self::Supt => BandKind::ConfSupt,
            Self::Bonferroni => BandKind::ConfBonferroni,
            Self::Pointwise => BandKind::ConfPointwise,
        }
    }
}

/// Per-lag closed intervals `[lower[h-1], upper[h-1]]` for `h = 1..=H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub kind: BandKind,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t: usize,
    pub scaling_c: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Band {
    pub fn max_lag(&self) -> usize {
        self.upper.len()
    }

    /// Symmetric band around zero with half-widths `c * sqrt(var_h / T)`.
    pub(crate) fn around_zero(kind: BandKind, t: usize, alpha: f64, c: f64, var: &[f64]) -> Self {
        let upper: Vec<f64> = var.iter().map(|&v| half_width(c, v, t)).collect();
        let lower = upper.iter().map(|u| -u).collect();
        Self {
            kind,
            alpha,
            t,
            scaling_c: c,
            lower,
            upper,
        }
    }
}

fn half_width(c: f64, var: f64, t: usize) -> f64 {
    c * (var.max(VARIANCE_FLOOR) / t as f64).sqrt()
}

pub(crate) fn check_params(t: usize, h: usize, alpha: f64) -> Result<()> {
    if t < 2 {
        return Err(Error::InsufficientData { got: t, min: 2 });
    }
    if h == 0 || h > t - 1 {
        return Err(Error::InvalidLag { lag: h, max: t - 1 });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// Band that holds the whole white-noise ACF with probability `1 - alpha`
/// (Šidák critical value, no estimation needed).
pub fn significance_band_simultaneous(t: usize, h: usize, alpha: f64) -> Result<Band> {
    check_params(t, h, alpha)?;
    let c = sidak_quantile(1.0 - alpha, h);
    Ok(Band::around_zero(
        BandKind::SigSimultaneous,
        t,
        alpha,
        c,
        &vec![1.0; h],
    ))
}

/// Conventional `+-z_{1-alpha/2}/sqrt(T)` band.
pub fn significance_band_pointwise(t: usize, h: usize, alpha: f64) -> Result<Band> {
    check_params(t, h, alpha)?;
    let c = normal::quantile(1.0 - alpha / 2.0);
    Ok(Band::around_zero(
        BandKind::SigPointwise,
        t,
        alpha,
        c,
        &vec![1.0; h],
    ))
}

/// Band `rho_hat(h) +- c * sqrt(b_hh / T)` with `c` chosen by `kind`.
pub fn confidence_band(
    acf: &AcfEstimate,
    bhat: &CovMatrix,
    alpha: f64,
    kind: ConfidenceKind,
    opts: &QuantileOptions,
) -> Result<Band> {
    let h = acf.max_lag();
    let t = acf.t();
    check_params(t, h, alpha)?;
    if bhat.dim() != h {
        return Err(Error::DimensionMismatch {
            expected: h,
            found: bhat.dim(),
        });
    }
    let var: Vec<f64> = bhat
        .diagonal()
        .into_iter()
        .map(|v| v.max(VARIANCE_FLOOR))
        .collect();
    let c = match kind {
        ConfidenceKind::Pointwise => normal::quantile(1.0 - alpha / 2.0),
        ConfidenceKind::Bonferroni => normal::quantile(1.0 - alpha / (2.0 * h as f64)),
        ConfidenceKind::Supt => {
            let mut m = bhat.matrix().clone();
            for (i, v) in var.iter().enumerate() {
                m[(i, i)] = *v;
            }
            let sigma = CovMatrix::new(m, bhat.label())?;
            equicoordinate_quantile(&QuantileRequest {
                sigma,
                tau: 1.0 - alpha,
                options: *opts,
            })?
        }
    };
    let (lower, upper) = acf
        .rho()
        .iter()
        .zip(&var)
        .map(|(r, v)| {
            let hw = half_width(c, *v, t);
            (r - hw, r + hw)
        })
        .unzip();
    Ok(Band {
        kind: kind.band_kind(),
        alpha,
        t,
        scaling_c: c,
        lower,
        upper,
    })
}

/// Whether the sample ACF leaves a significance band at some lag.
pub fn rejects_white_noise(acf: &AcfEstimate, band: &Band) -> Result<bool> {
    if !band.kind.is_significance() {
        return Err(Error::KindMismatch(format!(
            "{} is a confidence band; use covers_path with a zero path",
            band.kind
        )));
    }
    if acf.max_lag() != band.max_lag() {
        return Err(Error::DimensionMismatch {
            expected: band.max_lag(),
            found: acf.max_lag(),
        });
    }
    Ok(!inside(band, acf.rho()))
}

/// Whether every `rho[h-1]` lies in the closed confidence interval at lag `h`.
pub fn covers_path(band: &Band, rho: &[f64]) -> Result<bool> {
    if band.kind.is_significance() {
        return Err(Error::KindMismatch(format!(
            "{} is a significance band; use rejects_white_noise",
            band.kind
        )));
    }
    if rho.len() != band.max_lag() {
        return Err(Error::DimensionMismatch {
            expected: band.max_lag(),
            found: rho.len(),
        });
    }
    Ok(inside(band, rho))
}

fn inside(band: &Band, rho: &[f64]) -> bool {
    rho.iter()
        .zip(band.lower.iter().zip(&band.upper))
        .all(|(r, (lo, hi))| lo <= r && r <= hi)
}

/// `upper(h) - lower(h)` per lag.
pub fn band_width(band: &Band) -> Vec<f64> {
    band.upper
        .iter()
        .zip(&band.lower)
        .map(|(u, l)| u - l)
        .collect()
}

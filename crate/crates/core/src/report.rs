//! Band reports: what the command line computes, writes and plots.

use crate::acf::{compute_acf, default_max_lag, AcfEstimate, TimeSeries};
use crate::bands::{
    confidence_band, covers_path, rejects_white_noise, significance_band_pointwise,
    significance_band_simultaneous, Band, BandKind, ConfidenceKind,
};
use crate::bartlett::{melard_roy_estimate, BandwidthRule, KernelBandwidth};
use crate::error::{Error, Result};
use crate::quantile::QuantileOptions;
use crate::regression::{
    exact_band, lagged_design, ols_fit, residual_acf, shrink_sigma_rho, sigma_rho_plugin, SigmaMode,
};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfSummary {
    #[serde(rename = "T")]
    pub t: usize,
    pub mean: f64,
    pub gamma0: f64,
    /// `rho_hat(1..=H)`.
    pub rho: Vec<f64>,
}

impl From<&AcfEstimate> for AcfSummary {
    fn from(a: &AcfEstimate) -> Self {
        Self {
            t: a.t(),
            mean: a.mean(),
            gamma0: a.gamma()[0],
            rho: a.rho().to_vec(),
        }
    }
}

/// Outcome for one band. For confidence bands `rejects_white_noise` means
/// the zero path is not covered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub band: BandKind,
    pub rejects_white_noise: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covers_zero: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionMeta {
    pub lags_endog: usize,
    pub lags_exog: usize,
    pub n_exog: usize,
    pub differenced: bool,
    pub mode: SigmaMode,
    pub naive_only: bool,
    /// First leading block of the residual covariance estimate that was not
    /// positive definite; absent for static regressions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_star: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub alpha: f64,
    #[serde(rename = "H")]
    pub max_lag: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<BandwidthRule>,
    /// Resolved `L` for confidence bands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_value: Option<f64>,
    pub quantile: QuantileOptions,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub acf: AcfSummary,
    pub bands: Vec<Band>,
    pub decisions: Vec<Decision>,
    pub meta: Meta,
}

/// Parses `sig-sim`, `sig-pw`, `conf-supt`, `conf-bonf`, `conf-pw` or a
/// snake_case band name.
pub fn parse_band_kind(s: &str) -> Result<BandKind> {
    Ok(match s.trim() {
        "sig-sim" | "sig_simultaneous" => BandKind::SigSimultaneous,
        "sig-pw" | "sig_pointwise" => BandKind::SigPointwise,
        "conf-supt" | "conf_supt" => BandKind::ConfSupt,
        "conf-bonf" | "conf_bonferroni" => BandKind::ConfBonferroni,
        "conf-pw" | "conf_pointwise" => BandKind::ConfPointwise,
        other => return Err(Error::InvalidInput(format!("unknown band kind '{other}'"))),
    })
}

/// Parses `sqrt`, `sqrt:<m>`, `cbrt`, `cbrt:<c>` or `fixed:<L>`.
pub fn parse_bandwidth(s: &str) -> Result<BandwidthRule> {
    let bad = || {
        Error::InvalidInput(format!(
            "bad bandwidth '{s}'; use sqrt[:m], cbrt[:c] or fixed:L"
        ))
    };
    let (name, arg) = match s.trim().split_once(':') {
        Some((n, a)) => (n, Some(a.trim().parse::<f64>().map_err(|_| bad())?)),
        None => (s.trim(), None),
    };
    let rule = match (name, arg) {
        ("sqrt", m) => BandwidthRule::MSqrt(m.unwrap_or(1.0)),
        ("cbrt", c) => BandwidthRule::CCubeRoot(c.unwrap_or(1.0)),
        ("fixed", Some(l)) => BandwidthRule::Fixed(l),
        _ => return Err(bad()),
    };
    match rule {
        BandwidthRule::MSqrt(v) | BandwidthRule::CCubeRoot(v) | BandwidthRule::Fixed(v)
            if v.is_finite() && v > 0.0 =>
        {
            Ok(rule)
        }
        _ => Err(bad()),
    }
}

fn decide(acf: &AcfEstimate, band: &Band) -> Result<Decision> {
    Ok(if band.kind.is_significance() {
        Decision {
            band: band.kind,
            rejects_white_noise: rejects_white_noise(acf, band)?,
            covers_zero: None,
        }
    } else {
        let covers = covers_path(band, &vec![0.0; band.max_lag()])?;
        Decision {
            band: band.kind,
            rejects_white_noise: !covers,
            covers_zero: Some(covers),
        }
    })
}

fn check_max_lag(t: usize, max_lag: Option<usize>) -> Result<usize> {
    let h = max_lag.unwrap_or_else(|| default_max_lag(t));
    if h == 0 || h >= t {
        return Err(Error::InvalidLag {
            lag: h,
            max: t.saturating_sub(1),
        });
    }
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct SeriesRequest {
    pub alpha: f64,
    /// `None` means `floor(10 log10 T)`.
    pub max_lag: Option<usize>,
    pub bands: Vec<BandKind>,
    pub bandwidth: BandwidthRule,
    pub quantile: QuantileOptions,
}

/// Bands for the sample ACF of an observed series.
pub fn series_report(values: Vec<f64>, req: &SeriesRequest) -> Result<BandReport> {
    let series = TimeSeries::new(values)?;
    let h = check_max_lag(series.len(), req.max_lag)?;
    let acf = compute_acf(&series, h)?;
    let t = acf.t();
    let needs_bhat = req.bands.iter().any(|k| !k.is_significance());
    let kb = KernelBandwidth::bartlett(req.bandwidth);
    let bhat = if needs_bhat {
        Some(melard_roy_estimate(&acf, &kb)?)
    } else {
        None
    };
    let mut bands = Vec::with_capacity(req.bands.len());
    for kind in &req.bands {
        let band = match kind {
            BandKind::SigSimultaneous => significance_band_simultaneous(t, h, req.alpha)?,
            BandKind::SigPointwise => significance_band_pointwise(t, h, req.alpha)?,
            BandKind::ConfSupt | BandKind::ConfBonferroni | BandKind::ConfPointwise => {
                let ck = match kind {
                    BandKind::ConfSupt => ConfidenceKind::Supt,
                    BandKind::ConfBonferroni => ConfidenceKind::Bonferroni,
                    _ => ConfidenceKind::Pointwise,
                };
                let bhat = bhat
                    .as_ref()
                    .expect("computed when a confidence band is requested");
                confidence_band(&acf, bhat, req.alpha, ck, &req.quantile)?
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "{other} applies to regression residuals only"
                )))
            }
        };
        bands.push(band);
    }
    let decisions = bands
        .iter()
        .map(|b| decide(&acf, b))
        .collect::<Result<_>>()?;
    Ok(BandReport {
        acf: AcfSummary::from(&acf),
        bands,
        decisions,
        meta: Meta {
            alpha: req.alpha,
            max_lag: h,
            bandwidth: needs_bhat.then_some(req.bandwidth),
            bandwidth_value: if needs_bhat {
                Some(kb.resolve(t)?)
            } else {
                None
            },
            quantile: req.quantile,
            seed: req.quantile.seed,
            regression: None,
        },
    })
}

#[derive(Debug, Clone)]
pub struct ResidualRequest {
    pub alpha: f64,
    pub max_lag: Option<usize>,
    pub lags_endog: usize,
    pub lags_exog: usize,
    pub differenced: bool,
    pub mode: SigmaMode,
    /// Report only the naive band for dynamic regressions.
    pub naive_only: bool,
    pub quantile: QuantileOptions,
}

/// Bands for the residual ACF of `y` regressed on lags of itself and of `exog`.
///
/// Without own lags the residual autocorrelations behave like those of an
/// observed series, so the simultaneous band is the usual one. With own lags
/// the report holds the exact band (unless `naive_only`) and the naive one.
/// The pointwise band is always included for reference.
pub fn residual_report(y: &[f64], exog: &[Vec<f64>], req: &ResidualRequest) -> Result<BandReport> {
    if req.naive_only && req.mode == SigmaMode::Het {
        return Err(Error::InvalidInput(
            "the naive band does not use a covariance estimate; drop --mode het or --naive".into(),
        ));
    }
    let data = lagged_design(y, exog, req.lags_endog, req.lags_exog, req.differenced)?;
    let fit = ols_fit(&data)?;
    let t = fit.t();
    let h = check_max_lag(t, req.max_lag)?;
    let acf = residual_acf(&fit, h)?;
    let mut bands = Vec::new();
    let mut k_star = None;
    if req.lags_endog == 0 {
        bands.push(significance_band_simultaneous(t, h, req.alpha)?);
    } else {
        if !req.naive_only {
            let est = shrink_sigma_rho(&sigma_rho_plugin(&fit, h, req.mode)?);
            k_star = Some(est.k_star);
            bands.push(exact_band(&est, t, req.alpha, &req.quantile)?);
        }
        let mut naive = significance_band_simultaneous(t, h, req.alpha)?;
        naive.kind = BandKind::SigDynamicNaive;
        bands.push(naive);
    }
    bands.push(significance_band_pointwise(t, h, req.alpha)?);
    let decisions = bands
        .iter()
        .map(|b| decide(&acf, b))
        .collect::<Result<_>>()?;
    Ok(BandReport {
        acf: AcfSummary::from(&acf),
        bands,
        decisions,
        meta: Meta {
            alpha: req.alpha,
            max_lag: h,
            bandwidth: None,
            bandwidth_value: None,
            quantile: req.quantile,
            seed: req.quantile.seed,
            regression: Some(RegressionMeta {
                lags_endog: req.lags_endog,
                lags_exog: req.lags_exog,
                n_exog: exog.len(),
                differenced: req.differenced,
                mode: req.mode,
                naive_only: req.naive_only,
                k_star,
            }),
        },
    })
}

impl BandReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        r.check()?;
        Ok(r)
    }

    /// Structural consistency: every band covers lags `1..=H`.
    pub fn check(&self) -> Result<()> {
        let h = self.acf.rho.len();
        if h == 0 {
            return Err(Error::InvalidInput("report has no autocorrelations".into()));
        }
        for b in &self.bands {
            if b.lower.len() != h || b.upper.len() != h {
                return Err(Error::DimensionMismatch {
                    expected: h,
                    found: b.lower.len().min(b.upper.len()),
                });
            }
        }
        Ok(())
    }

    /// One row per lag: `h, rho_hat`, then `<kind>_lower, <kind>_upper` per
    /// band, with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,rho_hat");
        for b in &self.bands {
            let _ = write!(out, ",{0}_lower,{0}_upper", b.kind);
        }
        out.push('\n');
        for (i, r) in self.acf.rho.iter().enumerate() {
            let _ = write!(out, "{},{}", i + 1, sci17(*r));
            for b in &self.bands {
                let _ = write!(out, ",{},{}", sci17(b.lower[i]), sci17(b.upper[i]));
            }
            out.push('\n');
        }
        out
    }
}

fn sci17(v: f64) -> String {
    format!("{v:.16e}")
}

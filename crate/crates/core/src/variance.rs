//! HC0-HC3 variance estimators and Wald intervals.
//!
//! All estimates target the variance of `sqrt(n) (tau_hat - tau)`:
//!
//! ```text
//! sigma2_HCj = n / (n1 (n1 - 1)) Σ_{T1} e~²  +  n / (n0 (n0 - 1)) Σ_{T0} e~²
//! ```
//!
//! with `e~` the arm residual rescaled by `sqrt((n-1)/(n-p))` (HC1),
//! `1/sqrt(1 - H_t,ii)` (HC2) or `1/(1 - H_t,ii)` (HC3). `H_t` is the hat
//! matrix of the arm's covariate rows without the intercept column.

use crate::estimators::ArmFit;
use crate::stats::normal_quantile;
use crate::{Error, Result};

/// Arm leverages at or above `1 - LEVERAGE_EPS` make HC2/HC3 undefined.
pub const LEVERAGE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HcKind {
    Hc0,
    Hc1,
    Hc2,
    Hc3,
}

impl HcKind {
    pub const ALL: [HcKind; 4] = [HcKind::Hc0, HcKind::Hc1, HcKind::Hc2, HcKind::Hc3];
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HcOptions {
    /// Use `(n_t - 1)/(n_t - p - 1)` per arm for HC1 instead of `(n - 1)/(n - p)`.
    pub hc1_arm_level: bool,
}

/// Scale convention of a variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceScale {
    /// Variance of `sqrt(n) (tau_hat - tau)`; divide by `n` for the variance of `tau_hat`.
    #[default]
    RootN,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimates {
    pub hc0: f64,
    pub hc1: f64,
    pub hc2: f64,
    pub hc3: f64,
    pub se_scale: VarianceScale,
}

impl VarianceEstimates {
    pub fn get(&self, kind: HcKind) -> f64 {
        match kind {
            HcKind::Hc0 => self.hc0,
            HcKind::Hc1 => self.hc1,
            HcKind::Hc2 => self.hc2,
            HcKind::Hc3 => self.hc3,
        }
    }
}

fn arm_sum(fit: &ArmFit, kind: HcKind, n: usize, p: usize, opts: HcOptions) -> Result<f64> {
    let n_t = fit.n_t();
    let sq: f64 = match kind {
        HcKind::Hc0 => fit.resid.iter().map(|e| e * e).sum(),
        HcKind::Hc1 => {
            let raw: f64 = fit.resid.iter().map(|e| e * e).sum();
            // No regressors: the degrees-of-freedom correction is vacuous.
            let factor = if p == 0 {
                1.0
            } else if opts.hc1_arm_level {
                if n_t <= p + 1 {
                    return Err(Error::DegenerateDf { n: n_t, p: p + 1 });
                }
                (n_t - 1) as f64 / (n_t - p - 1) as f64
            } else {
                if n <= p {
                    return Err(Error::DegenerateDf { n, p });
                }
                (n - 1) as f64 / (n - p) as f64
            };
            factor * raw
        }
        HcKind::Hc2 | HcKind::Hc3 => {
            let mut s = 0.0;
            for (e, &h) in fit.resid.iter().zip(&fit.arm_leverages) {
                let one_minus = 1.0 - h;
                if !(one_minus > LEVERAGE_EPS) {
                    return Err(Error::LeverageAtOne);
                }
                s += if kind == HcKind::Hc2 { e * e / one_minus } else { e * e / (one_minus * one_minus) };
            }
            s
        }
    };
    Ok(n as f64 / (n_t as f64 * (n_t as f64 - 1.0)) * sq)
}

/// One HC variance estimate from the two arm fits.
pub fn hc_variance(fit1: &ArmFit, fit0: &ArmFit, kind: HcKind, opts: HcOptions) -> Result<f64> {
    let n = fit1.n_t() + fit0.n_t();
    let p = fit1.beta_hat.len();
    if fit0.beta_hat.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: fit0.beta_hat.len() });
    }
    if fit1.n_t() < 2 || fit0.n_t() < 2 {
        return Err(Error::DegenerateArm { n1: fit1.n_t(), n0: fit0.n_t() });
    }
    Ok(arm_sum(fit1, kind, n, p, opts)? + arm_sum(fit0, kind, n, p, opts)?)
}

/// All four HC estimates.
pub fn hc_variances(fit1: &ArmFit, fit0: &ArmFit, opts: HcOptions) -> Result<VarianceEstimates> {
    Ok(VarianceEstimates {
        hc0: hc_variance(fit1, fit0, HcKind::Hc0, opts)?,
        hc1: hc_variance(fit1, fit0, HcKind::Hc1, opts)?,
        hc2: hc_variance(fit1, fit0, HcKind::Hc2, opts)?,
        hc3: hc_variance(fit1, fit0, HcKind::Hc3, opts)?,
        se_scale: VarianceScale::RootN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub critical: f64,
}

impl WaldInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// `tau_hat ± critical * sqrt(sigma2_hat / n)` with an explicit critical value.
pub fn wald_interval_with_critical(tau_hat: f64, sigma2_hat: f64, n: usize, level: f64, critical: f64) -> Result<WaldInterval> {
    if !(sigma2_hat >= 0.0) {
        return Err(Error::NegativeVariance);
    }
    let half = critical * libm::sqrt(sigma2_hat / n as f64);
    Ok(WaldInterval { lower: tau_hat - half, upper: tau_hat + half, level, critical })
}

/// Normal-theory interval at `level`, with critical value `z_{(1+level)/2}`.
pub fn wald_interval(tau_hat: f64, sigma2_hat: f64, n: usize, level: f64) -> Result<WaldInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidSpec("confidence level must be in (0, 1)"));
    }
    wald_interval_with_critical(tau_hat, sigma2_hat, n, level, normal_quantile(0.5 * (1.0 + level)))
}

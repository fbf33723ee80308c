//! Fixed potential outcomes and their population regression targets.

use alloc::vec::Vec;

use crate::design::DesignMatrix;
use crate::linalg::{dot, mean, norm2};
use crate::{Error, Result};

/// The pair `(Y(1), Y(0))` for every unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialOutcomes {
    y1: Vec<f64>,
    y0: Vec<f64>,
    tau: f64,
}

impl PotentialOutcomes {
    pub fn new(y1: Vec<f64>, y0: Vec<f64>) -> Result<Self> {
        if y1.len() != y0.len() {
            return Err(Error::DimensionMismatch { expected: y1.len(), got: y0.len() });
        }
        if y1.iter().chain(&y0).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let tau = mean(&y1) - mean(&y0);
        Ok(Self { y1, y0, tau })
    }

    pub fn n(&self) -> usize {
        self.y1.len()
    }

    pub fn y1(&self) -> &[f64] {
        &self.y1
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn y(&self, arm: u8) -> &[f64] {
        if arm == 1 {
            &self.y1
        } else {
            &self.y0
        }
    }

    /// Average treatment effect.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Observed outcomes for a treatment indicator mask.
    pub fn observe(&self, treated: &[bool]) -> Vec<f64> {
        treated
            .iter()
            .zip(self.y1.iter().zip(&self.y0))
            .map(|(&t, (&a, &b))| if t { a } else { b })
            .collect()
    }
}

/// Population OLS of each potential outcome on `[1, X]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationOls {
    pub mu1: f64,
    pub mu0: f64,
    pub beta1: Vec<f64>,
    pub beta0: Vec<f64>,
    /// Potential residuals `e(1)`.
    pub e1: Vec<f64>,
    /// Potential residuals `e(0)`.
    pub e0: Vec<f64>,
}

impl PopulationOls {
    pub fn e(&self, arm: u8) -> &[f64] {
        if arm == 1 {
            &self.e1
        } else {
            &self.e0
        }
    }
}

pub fn population_ols(d: &DesignMatrix, po: &PotentialOutcomes) -> Result<PopulationOls> {
    if d.n() != po.n() {
        return Err(Error::DimensionMismatch { expected: d.n(), got: po.n() });
    }
    let fit = |y: &[f64]| -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let mu = mean(y);
        let centered: Vec<f64> = y.iter().map(|v| v - mu).collect();
        // X is centered, so the intercept decouples from the slope.
        let beta = d.qr().solve(&centered)?;
        let e = d.qr().residual(&centered);
        Ok((mu, beta, e))
    };
    let (mu1, beta1, e1) = fit(po.y1())?;
    let (mu0, beta0, e0) = fit(po.y0())?;
    Ok(PopulationOls { mu1, mu0, beta1, beta0, e1, e0 })
}

/// `Delta_t = n⁻¹ Σ_i e_i(t) H_ii` for `t = 1, 0`.
pub fn delta_terms(pols: &PopulationOls, d: &DesignMatrix) -> (f64, f64) {
    let n = d.n() as f64;
    let h = d.leverages();
    (dot(&pols.e1, h) / n, dot(&pols.e0, h) / n)
}

fn check_arms(n1: usize, n0: usize) -> Result<()> {
    if n1 < 2 || n0 < 2 {
        return Err(Error::DegenerateArm { n1, n0 });
    }
    Ok(())
}

/// `sigma_n^2` as the sum of squares
/// `Σ (sqrt(n0/(n1 n)) e_i(1) + sqrt(n1/(n0 n)) e_i(0))²`.
pub fn asymptotic_variance_sum_of_squares(pols: &PopulationOls, n1: usize, n0: usize) -> Result<f64> {
    check_arms(n1, n0)?;
    let (n1f, n0f) = (n1 as f64, n0 as f64);
    let n = n1f + n0f;
    let a = libm::sqrt(n0f / (n1f * n));
    let b = libm::sqrt(n1f / (n0f * n));
    Ok(pols.e1.iter().zip(&pols.e0).map(|(x, y)| (a * x + b * y) * (a * x + b * y)).sum())
}

/// Asymptotic variance of `sqrt(n) (tau_adj - tau)`:
/// `‖e(1)‖²/n1 + ‖e(0)‖²/n0 - ‖e(1) - e(0)‖²/n`.
pub fn asymptotic_variance(pols: &PopulationOls, n1: usize, n0: usize) -> Result<f64> {
    check_arms(n1, n0)?;
    if pols.e1.len() != n1 + n0 {
        return Err(Error::DimensionMismatch { expected: n1 + n0, got: pols.e1.len() });
    }
    let (n1f, n0f) = (n1 as f64, n0 as f64);
    let n = n1f + n0f;
    let s1 = dot(&pols.e1, &pols.e1) / n1f;
    let s0 = dot(&pols.e0, &pols.e0) / n0f;
    let s10 = pols.e1.iter().zip(&pols.e0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    let value = s1 + s0 - s10;
    debug_assert!({
        let alt = asymptotic_variance_sum_of_squares(pols, n1, n0).unwrap();
        (alt - value).abs() <= 1e-10 * (s1 + s0 + s10).max(f64::MIN_POSITIVE)
    });
    Ok(value)
}

/// Population-level quantities that govern consistency and normality.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDiagnostics {
    pub n: usize,
    pub p: usize,
    pub n1: usize,
    pub n0: usize,
    pub kappa: f64,
    /// `n⁻¹ max(‖e(0)‖², ‖e(1)‖²)`.
    pub e2: f64,
    /// `max(‖e(0)‖_inf, ‖e(1)‖_inf)`.
    pub e_inf: f64,
    /// Correlation of `e(1)` and `e(0)`; `None` when either is zero.
    pub rho_e: Option<f64>,
    pub delta1: f64,
    pub delta0: f64,
    /// `max(|Delta_1|, |Delta_0|)`.
    pub delta: f64,
    /// Cauchy-Schwarz ceiling `sqrt(E2 kappa p / n)` on `|Delta_t|`.
    pub delta_bound: f64,
    pub sigma_n2: f64,
    /// `E_inf² / (n E2)`.
    pub lindeberg: f64,
    /// `eta min(n1/n0, n0/n1) E2` with `eta = min(1, 1 + rho_e)`.
    pub sigma_lower_bound: Option<f64>,
    /// `kappa log p`.
    pub kappa_log_p: f64,
    /// `kappa p`.
    pub kappa_p: f64,
    /// `kappa² p log p`.
    pub kappa2_p_log_p: f64,
}

impl ResidualDiagnostics {
    pub fn zero_residuals(&self) -> bool {
        self.rho_e.is_none()
    }
}

pub fn residual_diagnostics(
    pols: &PopulationOls,
    d: &DesignMatrix,
    n1: usize,
    n0: usize,
) -> Result<ResidualDiagnostics> {
    let n = d.n();
    let nf = n as f64;
    let p = d.p();
    let pf = p as f64;
    let kappa = d.kappa();
    let sq1 = dot(&pols.e1, &pols.e1);
    let sq0 = dot(&pols.e0, &pols.e0);
    let e2 = sq1.max(sq0) / nf;
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let e_inf = inf(&pols.e1).max(inf(&pols.e0));
    let (nrm1, nrm0) = (norm2(&pols.e1), norm2(&pols.e0));
    let rho_e = if nrm1 > 0.0 && nrm0 > 0.0 {
        Some((dot(&pols.e1, &pols.e0) / (nrm1 * nrm0)).clamp(-1.0, 1.0))
    } else {
        None
    };
    let (delta1, delta0) = delta_terms(pols, d);
    let sigma_n2 = asymptotic_variance(pols, n1, n0)?;
    let ratio = (n1 as f64 / n0 as f64).min(n0 as f64 / n1 as f64);
    let log_p = if p > 0 { libm::log(pf) } else { 0.0 };
    Ok(ResidualDiagnostics {
        n,
        p,
        n1,
        n0,
        kappa,
        e2,
        e_inf,
        rho_e,
        delta1,
        delta0,
        delta: delta1.abs().max(delta0.abs()),
        delta_bound: libm::sqrt(e2 * kappa * pf / nf),
        sigma_n2,
        lindeberg: if e2 > 0.0 { e_inf * e_inf / (nf * e2) } else { 0.0 },
        sigma_lower_bound: rho_e.map(|r| (1.0f64).min(1.0 + r) * ratio * e2),
        kappa_log_p: kappa * log_p,
        kappa_p: kappa * pf,
        kappa2_p_log_p: kappa * kappa * pf * log_p,
    })
}

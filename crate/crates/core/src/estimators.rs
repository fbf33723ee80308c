//! Point estimators of the average treatment effect from one observed assignment.

use alloc::vec::Vec;

use crate::design::DesignMatrix;
use crate::linalg::{dot, mean, row_norms_sq, HouseholderQr, Matrix};
use crate::randomization::Assignment;
use crate::{Error, Result};

/// Relative tolerance used to declare an arm regression singular.
pub const ARM_RANK_TOL: f64 = 1e-10;

/// Observed outcomes `Y_i(T_i)` together with the assignment and the design.
#[derive(Debug, Clone)]
pub struct ObservedData<'a> {
    y_obs: Vec<f64>,
    assignment: Assignment,
    design: &'a DesignMatrix,
}

impl<'a> ObservedData<'a> {
    pub fn new(y_obs: Vec<f64>, assignment: Assignment, design: &'a DesignMatrix) -> Result<Self> {
        if y_obs.len() != design.n() {
            return Err(Error::DimensionMismatch { expected: design.n(), got: y_obs.len() });
        }
        if assignment.n() != design.n() {
            return Err(Error::DimensionMismatch { expected: design.n(), got: assignment.n() });
        }
        if y_obs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { y_obs, assignment, design })
    }

    pub fn y_obs(&self) -> &[f64] {
        &self.y_obs
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn design(&self) -> &'a DesignMatrix {
        self.design
    }
}

/// Least-squares fit of one arm's outcomes on `[1, X_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmFit {
    pub arm: u8,
    /// Unit indices of the arm, ascending.
    pub units: Vec<usize>,
    /// Plain mean of the arm's outcomes.
    pub y_mean: f64,
    pub mu_hat: f64,
    pub beta_hat: Vec<f64>,
    /// Residuals, aligned with `units`.
    pub resid: Vec<f64>,
    /// Diagonal of the hat matrix of `X_t` alone (no intercept), aligned with `units`.
    pub arm_leverages: Vec<f64>,
    /// Ratio of extreme `|R_jj|` in the arm QR; a rough conditioning indicator.
    pub gram_condition: f64,
}

impl ArmFit {
    pub fn n_t(&self) -> usize {
        self.units.len()
    }
}

/// Unadjusted, adjusted and debiased estimates plus the leverage corrections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimates {
    pub tau_unadj: f64,
    pub tau_adj: f64,
    pub tau_adj_de: f64,
    pub delta_hat1: f64,
    pub delta_hat0: f64,
}

fn arm_means(obs: &ObservedData<'_>, adjust: impl Fn(usize) -> f64) -> Result<f64> {
    let a = obs.assignment();
    if a.n1() == 0 || a.n0() == 0 {
        return Err(Error::EmptyArm);
    }
    let mask = a.mask();
    let (mut s1, mut s0) = (0.0, 0.0);
    for (i, &y) in obs.y_obs.iter().enumerate() {
        if mask[i] {
            s1 += y - adjust(i);
        } else {
            s0 += y - adjust(i);
        }
    }
    Ok(s1 / a.n1() as f64 - s0 / a.n0() as f64)
}

/// Treated mean minus control mean.
pub fn diff_in_means(obs: &ObservedData<'_>) -> Result<f64> {
    arm_means(obs, |_| 0.0)
}

/// Difference in means of `Y - xᵀ beta_t` for fixed coefficient vectors.
pub fn generic_adjusted(obs: &ObservedData<'_>, beta1: &[f64], beta0: &[f64]) -> Result<f64> {
    let p = obs.design.p();
    for b in [beta1, beta0] {
        if b.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: b.len() });
        }
    }
    let x = obs.design.x();
    let mask = obs.assignment.mask();
    arm_means(obs, |i| dot(x.row(i), if mask[i] { beta1 } else { beta0 }))
}

/// Regresses the arm's outcomes on its rows of the full-sample-centered `X`
/// plus an intercept.
pub fn fit_arm(obs: &ObservedData<'_>, arm: u8) -> Result<ArmFit> {
    let units = obs.assignment.arm(arm);
    let n_t = units.len();
    let p = obs.design.p();
    if n_t < p + 2 {
        return Err(Error::ArmTooSmall { arm, n_t, needed: p + 2 });
    }
    let x = obs.design.x();
    // Column order [X_t, 1]: the first p columns of Q then span X_t alone.
    let mut a = Matrix::zeros(n_t, p + 1);
    for (r, &i) in units.iter().enumerate() {
        let row = x.row(i);
        for j in 0..p {
            a[(r, j)] = row[j];
        }
        a[(r, p)] = 1.0;
    }
    let y: Vec<f64> = units.iter().map(|&i| obs.y_obs[i]).collect();
    let qr = HouseholderQr::new(&a, ARM_RANK_TOL);
    if qr.rank() < p + 1 {
        return Err(Error::ArmRankDeficient { arm });
    }
    let coef = qr.solve(&y)?;
    let resid = qr.residual(&y);
    let arm_leverages = row_norms_sq(&qr.thin_q(), p);
    Ok(ArmFit {
        arm,
        y_mean: mean(&y),
        mu_hat: coef[p],
        beta_hat: coef[..p].to_vec(),
        resid,
        arm_leverages,
        gram_condition: qr.diag_ratio(),
        units,
    })
}

/// Lin's estimator: difference of the arm intercepts.
pub fn adjusted_estimate(fit1: &ArmFit, fit0: &ArmFit) -> f64 {
    fit1.mu_hat - fit0.mu_hat
}

/// Adjusted estimate minus the leverage-weighted residual correction
/// `n1/n0 Delta_hat_0 - n0/n1 Delta_hat_1`, where `Delta_hat_t` averages
/// `e_hat_i H_ii` over the arm with full-sample leverages.
pub fn debiased_estimate(fit1: &ArmFit, fit0: &ArmFit, d: &DesignMatrix) -> PointEstimates {
    let h = d.leverages();
    let delta_hat = |f: &ArmFit| -> f64 {
        f.units.iter().zip(&f.resid).map(|(&i, e)| e * h[i]).sum::<f64>() / f.n_t() as f64
    };
    let delta_hat1 = delta_hat(fit1);
    let delta_hat0 = delta_hat(fit0);
    let (n1, n0) = (fit1.n_t() as f64, fit0.n_t() as f64);
    let tau_adj = adjusted_estimate(fit1, fit0);
    PointEstimates {
        tau_unadj: fit1.y_mean - fit0.y_mean,
        tau_adj,
        tau_adj_de: tau_adj - (n1 / n0 * delta_hat0 - n0 / n1 * delta_hat1),
        delta_hat1,
        delta_hat0,
    }
}

/// Coefficient of the treatment indicator in the single OLS of `y_obs` on
/// `[1, T, X, T X]`.
pub fn lin_interacted(obs: &ObservedData<'_>) -> Result<f64> {
    let n = obs.design.n();
    let p = obs.design.p();
    let a = obs.assignment();
    if a.n1() < p + 2 || a.n0() < p + 2 {
        let (arm, n_t) = if a.n1() < p + 2 { (1, a.n1()) } else { (0, a.n0()) };
        return Err(Error::ArmTooSmall { arm, n_t, needed: p + 2 });
    }
    let mask = a.mask();
    let x = obs.design.x();
    let mut m = Matrix::zeros(n, 2 * p + 2);
    for i in 0..n {
        let t = if mask[i] { 1.0 } else { 0.0 };
        m[(i, 0)] = 1.0;
        m[(i, 1)] = t;
        for (j, &v) in x.row(i).iter().enumerate() {
            m[(i, 2 + j)] = v;
            m[(i, 2 + p + j)] = t * v;
        }
    }
    let qr = HouseholderQr::new(&m, ARM_RANK_TOL);
    if qr.rank() < 2 * p + 2 {
        return Err(Error::SingularSystem);
    }
    Ok(qr.solve(&obs.y_obs)?[1])
}

/// Fits both arms and returns all point estimates.
pub fn estimate(obs: &ObservedData<'_>) -> Result<(ArmFit, ArmFit, PointEstimates)> {
    let fit1 = fit_arm(obs, 1)?;
    let fit0 = fit_arm(obs, 0)?;
    let est = debiased_estimate(&fit1, &fit0, obs.design);
    Ok((fit1, fit0, est))
}

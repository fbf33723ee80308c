//! Simple random sampling without replacement: exact moments, brute-force
//! oracles, concentration-bound validators and the Kolmogorov distance to
//! the standard normal.
//!
//! Throughout, `T` is a uniformly drawn size-`m` subset of `0..n`.

use alloc::vec::Vec;

use crate::linalg::{sym_eigen, sym_op_norm, Matrix};
use crate::randomization::Combinations;
use crate::rng::{domain, RngStream};
use crate::stats::{compensated_sum, normal_cdf};
use crate::{Error, Result};

fn srs_factor(n: usize, m: usize) -> f64 {
    (m as f64 * (n - m) as f64) / (n as f64 * (n as f64 - 1.0))
}

/// Mean and variance of `Σ_{i in T} w_i`:
/// `m w̄` and `m (n - m) / (n (n - 1)) Σ (w_i - w̄)²`.
pub fn srs_sum_moments(w: &[f64], m: usize) -> Result<(f64, f64)> {
    let n = w.len();
    if m < 1 || m > n {
        return Err(Error::InvalidSubsetSize { n, m });
    }
    let mean = crate::linalg::mean(w);
    if n == 1 {
        return Ok((w[0], 0.0));
    }
    let ss: f64 = w.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((m as f64 * mean, srs_factor(n, m) * ss))
}

/// A square matrix `Q` and a subset size; the statistic is
/// `Q_T = Σ_{i, j in T} Q_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadStat {
    pub q: Matrix,
    pub m: usize,
}

impl QuadStat {
    pub fn new(q: Matrix, m: usize) -> Result<Self> {
        if q.rows() != q.cols() {
            return Err(Error::DimensionMismatch { expected: q.rows(), got: q.cols() });
        }
        if m < 1 || m > q.rows() {
            return Err(Error::InvalidSubsetSize { n: q.rows(), m });
        }
        Ok(Self { q, m })
    }

    pub fn n(&self) -> usize {
        self.q.rows()
    }

    /// `Q_T` for one subset.
    pub fn value(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&i| subset.iter().map(|&j| self.q[(i, j)]).sum::<f64>()).sum()
    }
}

/// Exact `E Q_T = m(n-m)/(n(n-1)) tr(Q) + m(m-1)/(n(n-1)) 1ᵀQ1`.
pub fn srs_quadratic_mean(q: &QuadStat) -> Result<f64> {
    let n = q.n();
    if n < 2 {
        return Err(Error::InvalidSubsetSize { n, m: q.m });
    }
    let m = q.m as f64;
    let nf = n as f64;
    let trace: f64 = (0..n).map(|i| q.q[(i, i)]).sum();
    let total: f64 = q.q.as_slice().iter().sum();
    Ok(srs_factor(n, q.m) * trace + m * (m - 1.0) / (nf * (nf - 1.0)) * total)
}

/// Upper bound `m(n-m)/(n(n-1)) ‖Q‖_F²` on `Var(Q_T)`, valid when `Q` has
/// zero row and column sums and `n >= 4`.
pub fn srs_quadratic_variance_bound(q: &QuadStat) -> Result<f64> {
    let n = q.n();
    if n < 4 {
        return Err(Error::InvalidSubsetSize { n, m: q.m });
    }
    let tol = 1e-8 * q.q.max_abs().max(f64::MIN_POSITIVE) * n as f64;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| q.q[(i, j)]).sum();
        let col: f64 = (0..n).map(|j| q.q[(j, i)]).sum();
        if row.abs() > tol || col.abs() > tol {
            return Err(Error::RowColSumsNonzero);
        }
    }
    Ok(srs_factor(n, q.m) * q.q.frobenius_sq())
}

/// Exact mean and variance of `statistic(T)` over all `C(n, m)` subsets.
pub fn brute_force_moments<F>(mut statistic: F, n: usize, m: usize) -> Result<(f64, f64)>
where
    F: FnMut(&[usize]) -> f64,
{
    if m < 1 || m > n {
        return Err(Error::InvalidSubsetSize { n, m });
    }
    let values: Vec<f64> = Combinations::new(n, m)?.map(|s| statistic(&s)).collect();
    let count = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / count;
    let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / count;
    Ok((mean, var))
}

/// Monte Carlo audit of a probabilistic upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub trials: usize,
    pub violations: usize,
    pub bound_min: f64,
    pub bound_mean: f64,
    pub bound_max: f64,
    /// Largest observed left-hand side.
    pub lhs_max: f64,
    pub delta: f64,
    /// True when part of the bound was estimated rather than computed exactly.
    pub estimated: bool,
}

impl ConcentrationReport {
    pub fn violation_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.violations as f64 / self.trials as f64
        }
    }

    /// `delta + 4 sqrt(delta (1 - delta) / trials)`.
    pub fn allowed_rate(&self) -> f64 {
        self.delta + 4.0 * libm::sqrt(self.delta * (1.0 - self.delta) / self.trials.max(1) as f64)
    }

    pub fn passes(&self) -> bool {
        self.violation_rate() <= self.allowed_rate()
    }

    fn merge(mut self, other: &ConcentrationReport) -> Self {
        let total = (self.trials + other.trials).max(1) as f64;
        self.bound_mean = (self.bound_mean * self.trials as f64 + other.bound_mean * other.trials as f64) / total;
        self.trials += other.trials;
        self.violations += other.violations;
        self.bound_min = self.bound_min.min(other.bound_min);
        self.bound_max = self.bound_max.max(other.bound_max);
        self.lhs_max = self.lhs_max.max(other.lhs_max);
        self.estimated |= other.estimated;
        self
    }
}

/// Draws a uniform size-`m` subset (`1 <= m <= n`) for one trial.
fn trial_subset(n: usize, m: usize, seed: u64, trial: u64) -> Vec<usize> {
    if m == n {
        return (0..n).collect();
    }
    crate::randomization::sample_assignment(n, m, RngStream::new(seed, domain::AUX | trial))
        .expect("sizes checked")
        .treated()
        .to_vec()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidSpec("delta must be in (0, 1)"));
    }
    Ok(())
}

/// `‖U‖_F sqrt(m(n-m)/(n(n-1))) + ‖U‖_op sqrt(8 log(1/delta))`.
pub fn vector_concentration_bound(u: &Matrix, m: usize, delta: f64) -> f64 {
    let n = u.rows();
    libm::sqrt(u.frobenius_sq()) * libm::sqrt(srs_factor(n, m))
        + crate::linalg::op_norm(u) * libm::sqrt(8.0 * libm::log(1.0 / delta))
}

/// Counts how often `‖Σ_{i in T} u_i‖₂` exceeds the vector bound.
/// Trial `k` uses its own stream, so results do not depend on evaluation order.
pub fn check_vector_concentration(u: &Matrix, m: usize, delta: f64, trials: usize, seed: u64) -> Result<ConcentrationReport> {
    let n = u.rows();
    if m < 1 || m > n {
        return Err(Error::InvalidSubsetSize { n, m });
    }
    check_delta(delta)?;
    let scale = u.max_abs().max(f64::MIN_POSITIVE) * n as f64;
    for j in 0..u.cols() {
        let s: f64 = (0..n).map(|i| u[(i, j)]).sum();
        if s.abs() > 1e-8 * scale {
            return Err(Error::NotCentered);
        }
    }
    let bound = vector_concentration_bound(u, m, delta);
    let mut violations = 0;
    let mut lhs_max = 0.0f64;
    for k in 0..trials {
        let subset = trial_subset(n, m, seed, k as u64);
        let mut sum = alloc::vec![0.0; u.cols()];
        for &i in &subset {
            for (s, v) in sum.iter_mut().zip(u.row(i)) {
                *s += v;
            }
        }
        let lhs = crate::linalg::norm2(&sum);
        lhs_max = lhs_max.max(lhs);
        if lhs > bound {
            violations += 1;
        }
    }
    Ok(ConcentrationReport {
        trials,
        violations,
        bound_min: bound,
        bound_mean: bound,
        bound_max: bound,
        lhs_max,
        delta,
        estimated: false,
    })
}

/// Variance proxies for the matrix bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProxies {
    /// `‖n⁻¹ Σ V_i²‖_op^{1/2}`.
    pub nu: f64,
    /// `sup_ω (n⁻¹ Σ (ωᵀ V_i ω)²)^{1/2}`.
    pub nu_minus: f64,
    /// `max_i ‖V_i‖_op`.
    pub nu_plus: f64,
    /// `4 (1 + ceil(2 log p))`.
    pub c_p: f64,
    /// `nu_minus` is a random-direction lower estimate (only for `p > 2`).
    pub estimated: bool,
}

fn quad_form_mean_sq(vs: &[Matrix], w: &[f64]) -> f64 {
    let n = vs.len() as f64;
    vs.iter()
        .map(|v| {
            let p = w.len();
            let mut s = 0.0;
            for a in 0..p {
                for b in 0..p {
                    s += w[a] * v[(a, b)] * w[b];
                }
            }
            s * s
        })
        .sum::<f64>()
        / n
}

/// Supremum of `n⁻¹ Σ (ωᵀ V_i ω)²` over unit `ω`. Exact up to optimizer
/// tolerance for `p <= 2`, a random-direction lower estimate otherwise.
fn nu_minus_sq(vs: &[Matrix], p: usize, seed: u64) -> (f64, bool) {
    match p {
        0 => (0.0, false),
        1 => (quad_form_mean_sq(vs, &[1.0]), false),
        2 => {
            let f = |theta: f64| quad_form_mean_sq(vs, &[libm::cos(theta), libm::sin(theta)]);
            // The objective is a degree-4 trigonometric polynomial on [0, pi):
            // a dense grid isolates every local maximum, golden section polishes.
            const GRID: usize = 720;
            let step = core::f64::consts::PI / GRID as f64;
            let vals: Vec<f64> = (0..GRID).map(|k| f(k as f64 * step)).collect();
            let mut best = vals.iter().cloned().fold(0.0, f64::max);
            for k in 0..GRID {
                let (prev, next) = (vals[(k + GRID - 1) % GRID], vals[(k + 1) % GRID]);
                if vals[k] >= prev && vals[k] >= next {
                    let (mut a, mut b) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
                    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
                    for _ in 0..80 {
                        let c = b - g * (b - a);
                        let d = a + g * (b - a);
                        if f(c) > f(d) {
                            b = d;
                        } else {
                            a = c;
                        }
                    }
                    best = best.max(f(0.5 * (a + b)));
                }
            }
            (best, false)
        }
        _ => {
            let mut s = RngStream::new(seed, domain::AUX | (1 << 40)).sampler();
            let mut best = 0.0f64;
            for j in 0..p {
                let mut e = alloc::vec![0.0; p];
                e[j] = 1.0;
                best = best.max(quad_form_mean_sq(vs, &e));
            }
            for _ in 0..4000 {
                let mut w: Vec<f64> = (0..p).map(|_| s.normal()).collect();
                let nrm = crate::linalg::norm2(&w);
                w.iter_mut().for_each(|x| *x /= nrm);
                best = best.max(quad_form_mean_sq(vs, &w));
            }
            (best, true)
        }
    }
}

pub fn matrix_proxies(vs: &[Matrix], seed: u64) -> Result<MatrixProxies> {
    let n = vs.len();
    if n == 0 {
        return Err(Error::InvalidSubsetSize { n, m: 0 });
    }
    let p = vs[0].rows();
    let mut sum = Matrix::zeros(p, p);
    let mut sq_sum = Matrix::zeros(p, p);
    let mut nu_plus = 0.0f64;
    let mut scale = 0.0f64;
    for v in vs {
        if v.rows() != p || v.cols() != p {
            return Err(Error::DimensionMismatch { expected: p, got: v.rows() });
        }
        for a in 0..p {
            for b in 0..p {
                if (v[(a, b)] - v[(b, a)]).abs() > 1e-10 * v.max_abs().max(f64::MIN_POSITIVE) {
                    return Err(Error::NotCenteredMatrices);
                }
                sum[(a, b)] += v[(a, b)];
            }
        }
        let v2 = v.matmul(v)?;
        for a in 0..p {
            for b in 0..p {
                sq_sum[(a, b)] += v2[(a, b)];
            }
        }
        nu_plus = nu_plus.max(sym_op_norm(v));
        scale = scale.max(v.max_abs());
    }
    if sum.max_abs() > 1e-8 * scale.max(f64::MIN_POSITIVE) * n as f64 {
        return Err(Error::NotCenteredMatrices);
    }
    sq_sum.scale(1.0 / n as f64);
    let (eig, _) = sym_eigen(&sq_sum);
    let nu = libm::sqrt(eig.last().copied().unwrap_or(0.0).max(0.0));
    let (nm2, estimated) = nu_minus_sq(vs, p, seed);
    let c_p = 4.0 * (1.0 + libm::ceil(2.0 * libm::log(p.max(1) as f64)));
    Ok(MatrixProxies { nu, nu_minus: libm::sqrt(nm2), nu_plus, c_p, estimated })
}

/// `sqrt(n C(p)) nu + C(p) nu_plus + sqrt(8 n log(1/delta)) nu_minus`.
pub fn matrix_concentration_bound(proxies: &MatrixProxies, n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    libm::sqrt(nf * proxies.c_p) * proxies.nu
        + proxies.c_p * proxies.nu_plus
        + libm::sqrt(8.0 * nf * libm::log(1.0 / delta)) * proxies.nu_minus
}

/// Counts how often `‖Σ_{i in T} V_i‖_op` exceeds the matrix bound.
pub fn check_matrix_concentration(vs: &[Matrix], m: usize, delta: f64, trials: usize, seed: u64) -> Result<ConcentrationReport> {
    let n = vs.len();
    if m < 1 || m > n {
        return Err(Error::InvalidSubsetSize { n, m });
    }
    check_delta(delta)?;
    let proxies = matrix_proxies(vs, seed)?;
    let bound = matrix_concentration_bound(&proxies, n, delta);
    let p = vs[0].rows();
    let mut report = ConcentrationReport {
        trials: 0,
        violations: 0,
        bound_min: bound,
        bound_mean: bound,
        bound_max: bound,
        lhs_max: 0.0,
        delta,
        estimated: proxies.estimated,
    };
    for k in 0..trials {
        let subset = trial_subset(n, m, seed, k as u64);
        let mut s = Matrix::zeros(p, p);
        for &i in &subset {
            for a in 0..p {
                for b in 0..p {
                    s[(a, b)] += vs[i][(a, b)];
                }
            }
        }
        let lhs = sym_op_norm(&s);
        let one = ConcentrationReport {
            trials: 1,
            violations: usize::from(lhs > bound),
            lhs_max: lhs,
            ..report.clone()
        };
        report = report.merge(&one);
    }
    Ok(report)
}

/// `sup_x |F_hat(x) - Phi(x)|` for a sorted sample, evaluated at the jumps.
pub fn kolmogorov_distance(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = normal_cdf(x);
            ((i + 1) as f64 / n - phi).max(phi - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

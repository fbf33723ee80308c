//! Sampling-without-replacement oracle suite behind `oracle-check`.

use randadjust_core::design::{center_and_reduce, orthonormalize, RawCovariates, DEFAULT_RANK_TOL};
use randadjust_core::linalg::{mean, Matrix};
use randadjust_core::randomization::sample_assignment;
use randadjust_core::rng::{domain, RngStream, Sampler};
use randadjust_core::srs_moments::{
    brute_force_moments, check_matrix_concentration, check_vector_concentration, kolmogorov_distance,
    srs_quadratic_mean, srs_quadratic_variance_bound, srs_sum_moments, ConcentrationReport, QuadStat,
};
use serde::Serialize;

use crate::error::AppResult;
use crate::output::format_g;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub check: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn normals(s: &mut Sampler, k: usize) -> Vec<f64> {
    (0..k).map(|_| s.normal()).collect()
}

/// `V Q V` with `V = I - 11ᵀ/n`: zero row and column sums.
pub fn double_center(q: &Matrix) -> Matrix {
    let n = q.rows();
    let row_means: Vec<f64> = (0..n).map(|i| mean(q.row(i))).collect();
    let col_means: Vec<f64> = (0..n).map(|j| mean(&q.column(j))).collect();
    let grand = mean(&row_means);
    let mut out = q.clone();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = q[(i, j)] - row_means[i] - col_means[j] + grand;
        }
    }
    out
}

/// Exact first moments against enumeration; returns the largest absolute error.
pub fn exact_moments(instances: usize, seed: u64) -> AppResult<f64> {
    let mut s = RngStream::new(seed, domain::AUX).sampler();
    let mut worst = 0.0f64;
    for k in 0..instances {
        let n = 4 + k % 5;
        let m = 1 + s.below(n as u64 - 1) as usize;
        let w = normals(&mut s, n);
        let (mean_w, var_w) = srs_sum_moments(&w, m)?;
        let (bm, bv) = brute_force_moments(|t| t.iter().map(|&i| w[i]).sum(), n, m)?;
        let q = QuadStat::new(Matrix::from_row_major(n, n, normals(&mut s, n * n))?, m)?;
        let (qm, _) = brute_force_moments(|t| q.value(t), n, m)?;
        let errs = [(mean_w - bm).abs(), (var_w - bv).abs(), (srs_quadratic_mean(&q)? - qm).abs()];
        worst = errs.iter().fold(worst, |a, &b| a.max(b));
    }
    Ok(worst)
}

/// Enumerated variance of `Q_T` against the bound for doubly centered `Q`;
/// returns `(violations, largest var / bound)`.
pub fn quadratic_bound(instances: usize, seed: u64) -> AppResult<(usize, f64)> {
    let mut s = RngStream::new(seed, domain::AUX | 1).sampler();
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for k in 0..instances {
        let n = 4 + k % 5;
        let m = 1 + s.below(n as u64 - 1) as usize;
        let q = double_center(&Matrix::from_row_major(n, n, normals(&mut s, n * n))?);
        let stat = QuadStat::new(q, m)?;
        let bound = srs_quadratic_variance_bound(&stat)?;
        let (_, var) = brute_force_moments(|t| stat.value(t), n, m)?;
        if var > bound {
            violations += 1;
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(var / bound);
        }
    }
    Ok((violations, worst_ratio))
}

/// Centered `n x p` Gaussian rows.
pub fn centered_rows(n: usize, p: usize, seed: u64) -> AppResult<Matrix> {
    let mut s = RngStream::new(seed, domain::AUX | 2).sampler();
    let mut u = Matrix::from_row_major(n, p, normals(&mut s, n * p))?;
    for j in 0..p {
        let mu = mean(&u.column(j));
        for i in 0..n {
            u[(i, j)] -= mu;
        }
    }
    Ok(u)
}

/// `V_i = x_i x_iᵀ - I` for an orthonormalized Gaussian design; `Σ V_i = 0`.
pub fn outer_product_family(n: usize, p: usize, seed: u64) -> AppResult<Vec<Matrix>> {
    let mut s = RngStream::new(seed, domain::AUX | 3).sampler();
    let raw = RawCovariates::new(Matrix::from_row_major(n, p, normals(&mut s, n * p))?)?;
    let d = orthonormalize(&center_and_reduce(&raw, DEFAULT_RANK_TOL)?);
    Ok((0..n)
        .map(|i| {
            let x = d.x().row(i);
            let mut v = Matrix::zeros(p, p);
            for a in 0..p {
                for b in 0..p {
                    v[(a, b)] = x[a] * x[b] - f64::from(u8::from(a == b));
                }
            }
            v
        })
        .collect())
}

pub fn vector_concentration(n: usize, p: usize, delta: f64, trials: usize, seed: u64) -> AppResult<ConcentrationReport> {
    Ok(check_vector_concentration(&centered_rows(n, p, seed)?, n / 2, delta, trials, seed)?)
}

pub fn matrix_concentration(n: usize, p: usize, delta: f64, trials: usize, seed: u64) -> AppResult<ConcentrationReport> {
    Ok(check_matrix_concentration(&outer_product_family(n, p, seed)?, n / 2, delta, trials, seed)?)
}

/// Kolmogorov distance of `Σ_{i in T} (w_i - w̄)` standardized by its exact SD,
/// with `w` the first `n` entries of one fixed Gaussian draw and `|T| = n f`.
pub fn clt_distance(n: usize, f: f64, draws: usize, seed: u64) -> AppResult<f64> {
    let mut s = RngStream::new(seed, domain::AUX | 4).sampler();
    let w: Vec<f64> = normals(&mut s, n);
    let m = (n as f64 * f).round() as usize;
    let (_, var) = srs_sum_moments(&w, m)?;
    let sd = var.sqrt();
    let w_bar = mean(&w);
    let mut z: Vec<f64> = (0..draws as u64)
        .map(|k| {
            let a = sample_assignment(n, m, RngStream::new(seed, domain::ASSIGNMENT | k)).expect("valid sizes");
            a.treated().iter().map(|&i| w[i] - w_bar).sum::<f64>() / sd
        })
        .collect();
    z.sort_by(f64::total_cmp);
    Ok(kolmogorov_distance(&z))
}

fn concentration_detail(r: &ConcentrationReport) -> String {
    format!(
        "violations {}/{} (rate {} <= {}), bound {}, max lhs {}{}",
        r.violations,
        r.trials,
        format_g(r.violation_rate()),
        format_g(r.allowed_rate()),
        format_g(r.bound_mean),
        format_g(r.lhs_max),
        if r.estimated { ", nu_minus estimated" } else { "" }
    )
}

/// Runs the suite. `fast` shrinks instance and trial counts.
pub fn run_suite(fast: bool, seed: u64) -> AppResult<Vec<OracleResult>> {
    let scale = |full: usize, quick: usize| if fast { quick } else { full };
    let mut out = Vec::new();

    let err = exact_moments(scale(200, 40), seed)?;
    out.push(OracleResult {
        check: "exact_moments",
        passed: err <= 1e-12,
        detail: format!("max abs error {}", format_g(err)),
    });

    let (violations, ratio) = quadratic_bound(scale(500, 100), seed)?;
    out.push(OracleResult {
        check: "quadratic_variance_bound",
        passed: violations == 0,
        detail: format!("violations {violations}, max var/bound {}", format_g(ratio)),
    });

    let trials = scale(10_000, 1_000);
    let r = vector_concentration(50, 3, 0.05, trials, seed)?;
    out.push(OracleResult { check: "vector_concentration", passed: r.passes(), detail: concentration_detail(&r) });
    for (p, name) in [(1, "matrix_concentration_p1"), (2, "matrix_concentration_p2")] {
        let r = matrix_concentration(50, p, 0.05, trials, seed)?;
        out.push(OracleResult { check: name, passed: r.passes(), detail: concentration_detail(&r) });
    }

    let draws = scale(10_000, 2_000);
    let large = clt_distance(2000, 0.5, draws, seed)?;
    let small = clt_distance(50, 0.5, draws, seed)?;
    // With few draws the Monte Carlo error swamps the gap between the two
    // populations, so the fast mode only checks the absolute distance.
    let (tol, ordered) = if fast { (0.1, true) } else { (0.05, large <= small) };
    out.push(OracleResult {
        check: "clt_kolmogorov",
        passed: large <= tol && ordered,
        detail: format!(
            "distance n=2000 {}, n=50 {}{}",
            format_g(large),
            format_g(small),
            if fast { " (ordering not checked)" } else { "" }
        ),
    });
    Ok(out)
}

pub fn results_csv(results: &[OracleResult]) -> String {
    let mut out = String::from("check,status,detail\n");
    for r in results {
        out.push_str(&format!("{},{},\"{}\"\n", r.check, if r.passed { "pass" } else { "fail" }, r.detail));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_centering_zeroes_sums() {
        let mut s = RngStream::new(1, 1).sampler();
        let q = double_center(&Matrix::from_row_major(5, 5, normals(&mut s, 25)).unwrap());
        for i in 0..5 {
            assert!(q.row(i).iter().sum::<f64>().abs() < 1e-12);
            assert!(q.column(i).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn outer_products_sum_to_zero() {
        let vs = outer_product_family(30, 2, 3).unwrap();
        let mut total = Matrix::zeros(2, 2);
        for v in &vs {
            for a in 0..2 {
                for b in 0..2 {
                    total[(a, b)] += v[(a, b)];
                }
            }
        }
        assert!(total.max_abs() < 1e-10);
    }

    #[test]
    fn fast_suite_passes() {
        let results = run_suite(true, 2024).unwrap();
        assert_eq!(results.len(), 6);
        for r in &results {
            assert!(r.passed, "{}: {}", r.check, r.detail);
        }
        assert!(results_csv(&results).starts_with("check,status,detail\n"));
    }
}

//! Covariate matrix construction: centering, rank reduction, leverage
//! scores, orthonormalization and quantile trimming.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{row_norms_sq, HouseholderQr, Matrix};
use crate::{Error, Result};

/// Default relative tolerance for dropping collinear columns.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Raw covariates, one row per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCovariates {
    data: Matrix,
}

impl RawCovariates {
    pub fn new(data: Matrix) -> Result<Self> {
        if data.rows() < 2 {
            return Err(Error::InvalidSpec("need at least two units"));
        }
        if data.cols() < 1 {
            return Err(Error::InvalidSpec("need at least one covariate column"));
        }
        if !data.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn q(&self) -> usize {
        self.data.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    /// The listed columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.data.select_columns(idx))
    }
}

/// Column-centered, full-column-rank covariate matrix with its leverage scores.
///
/// Immutable after construction. The QR factorization of `x` is kept so that
/// projections onto the column space never go through `(XᵀX)⁻¹`.
#[derive(Clone)]
pub struct DesignMatrix {
    x: Matrix,
    qr: HouseholderQr,
    leverages: Vec<f64>,
    kappa: f64,
    orthonormal: bool,
    kept_columns: Vec<usize>,
}

impl core::fmt::Debug for DesignMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DesignMatrix")
            .field("n", &self.n())
            .field("p", &self.p())
            .field("kappa", &self.kappa)
            .field("orthonormal", &self.orthonormal)
            .field("kept_columns", &self.kept_columns)
            .finish()
    }
}

impl DesignMatrix {
    /// A design with no covariates (`p = 0`); every leverage is zero.
    pub fn empty(n: usize) -> Self {
        let x = Matrix::zeros(n, 0);
        let qr = HouseholderQr::new(&x, DEFAULT_RANK_TOL);
        Self { x, qr, leverages: vec![0.0; n], kappa: 0.0, orthonormal: true, kept_columns: Vec::new() }
    }

    fn from_centered(x: Matrix, qr: HouseholderQr, kept_columns: Vec<usize>, orthonormal: bool) -> Self {
        let q = qr.thin_q();
        let leverages = row_norms_sq(&q, qr.rank());
        let kappa = leverages.iter().cloned().fold(0.0, f64::max);
        Self { x, qr, leverages, kappa, orthonormal, kept_columns }
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn qr(&self) -> &HouseholderQr {
        &self.qr
    }

    /// Diagonal of the hat matrix `X (XᵀX)⁻¹ Xᵀ`.
    pub fn leverages(&self) -> &[f64] {
        &self.leverages
    }

    /// Maximum leverage score.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Indices of the raw columns that survived rank reduction.
    pub fn kept_columns(&self) -> &[usize] {
        &self.kept_columns
    }

    /// The full `n x n` hat matrix. Only meant for small `n`.
    pub fn hat_matrix(&self) -> Matrix {
        let q = self.qr.thin_q();
        q.matmul(&q.transpose()).expect("conforming")
    }

    /// Projection of `y` onto the orthogonal complement of `[1, X]`.
    pub fn residual_with_intercept(&self, y: &[f64]) -> Vec<f64> {
        let m = crate::linalg::mean(y);
        let centered: Vec<f64> = y.iter().map(|v| v - m).collect();
        self.qr.residual(&centered)
    }
}

/// Centers the columns, drops collinear ones (keeping the earliest
/// independent set in column order) and computes leverage scores.
pub fn center_and_reduce(raw: &RawCovariates, rank_tol: f64) -> Result<DesignMatrix> {
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidSpec("rank_tol must be positive"));
    }
    let m = raw.matrix();
    if !m.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let n = m.rows();
    let mut cols = m.columns();
    for c in cols.iter_mut() {
        let scale = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mu = crate::linalg::mean(c);
        c.iter_mut().for_each(|v| *v -= mu);
        // Constant columns center to rounding noise; zero them exactly.
        let norm = crate::linalg::norm2(c);
        if norm <= 1e-13 * libm::sqrt(n as f64) * scale {
            c.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let centered = Matrix::from_columns(&cols)?;
    let full_qr = HouseholderQr::new(&centered, rank_tol);
    if full_qr.rank() == 0 {
        return Err(Error::AllColumnsConstant);
    }
    let kept = full_qr.kept().to_vec();
    let x = centered.select_columns(&kept);
    // Dropped columns never produced a reflector, so this is the QR of `x`.
    let qr = HouseholderQr::new(&x, rank_tol);
    debug_assert_eq!(qr.rank(), kept.len());
    Ok(DesignMatrix::from_centered(x, qr, kept, false))
}

/// Replaces `X` by `sqrt(n) Q`, so that `n⁻¹ XᵀX = I` and `H_ii = ‖x_i‖² / n`.
/// The column space, and hence the hat matrix, is unchanged.
pub fn orthonormalize(d: &DesignMatrix) -> DesignMatrix {
    if d.p() == 0 {
        return d.clone();
    }
    let mut x = d.qr.thin_q();
    x.scale(libm::sqrt(d.n() as f64));
    let qr = HouseholderQr::new(&x, DEFAULT_RANK_TOL);
    let kept = d.kept_columns.clone();
    let mut out = DesignMatrix::from_centered(x, qr, kept, true);
    // Use the exact identity H_ii = ‖x_i‖²/n for the stored leverages.
    let n = d.n() as f64;
    out.leverages = (0..d.n()).map(|i| out.x.row(i).iter().map(|v| v * v).sum::<f64>() / n).collect();
    out.kappa = out.leverages.iter().cloned().fold(0.0, f64::max);
    out
}

/// Index (0-based) of the type-1 empirical quantile: order statistic `ceil(q n)`,
/// clamped to `1..=n`.
fn type1_index(q: f64, n: usize) -> usize {
    let k = libm::ceil(q * n as f64 - 1e-9) as isize;
    (k.clamp(1, n as isize) - 1) as usize
}

/// Clips every column to its `[lower_q, upper_q]` type-1 empirical quantiles.
pub fn trim_columns(raw: &RawCovariates, lower_q: f64, upper_q: f64) -> Result<RawCovariates> {
    if !(0.0..=1.0).contains(&lower_q) || !(0.0..=1.0).contains(&upper_q) || lower_q >= upper_q {
        return Err(Error::InvalidQuantilePair { lower: lower_q, upper: upper_q });
    }
    let n = raw.n();
    let lo_idx = type1_index(lower_q, n);
    let hi_idx = type1_index(upper_q, n);
    let mut cols = raw.matrix().columns();
    for c in cols.iter_mut() {
        let mut sorted = c.clone();
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[lo_idx];
        let hi = sorted[hi_idx];
        c.iter_mut().for_each(|v| *v = v.clamp(lo, hi));
    }
    RawCovariates::new(Matrix::from_columns(&cols)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn raw(rows: &[&[f64]]) -> RawCovariates {
        RawCovariates::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_raw(n: usize, q: usize, seed: u64) -> RawCovariates {
        let mut s = RngStream::new(seed, 0).sampler();
        let data = (0..n * q).map(|_| s.normal()).collect();
        RawCovariates::new(Matrix::from_row_major(n, q, data).unwrap()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn three_point_design() {
        let d = center_and_reduce(&raw(&[&[1.0], &[2.0], &[3.0]]), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.p(), 1);
        assert!(close(&d.x().column(0), &[-1.0, 0.0, 1.0], 1e-15));
        assert!(close(d.leverages(), &[0.5, 0.0, 0.5], 1e-15));
        assert!((d.kappa() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicate_column_is_dropped() {
        let single = center_and_reduce(&raw(&[&[1.0], &[2.0], &[4.0], &[0.5]]), DEFAULT_RANK_TOL).unwrap();
        let dup = center_and_reduce(
            &raw(&[&[1.0, 1.0], &[2.0, 2.0], &[4.0, 4.0], &[0.5, 0.5]]),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert_eq!(dup.p(), 1);
        assert_eq!(dup.kept_columns(), &[0]);
        assert!(close(single.leverages(), dup.leverages(), 1e-14));
    }

    #[test]
    fn constant_columns() {
        let r = raw(&[&[3.0, 1.0], &[3.0, 2.0], &[3.0, 5.0]]);
        let d = center_and_reduce(&r, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.kept_columns(), &[1]);
        let all_const = raw(&[&[3.0, 0.1], &[3.0, 0.1], &[3.0, 0.1]]);
        assert_eq!(center_and_reduce(&all_const, DEFAULT_RANK_TOL).unwrap_err(), Error::AllColumnsConstant);
    }

    #[test]
    fn non_finite_rejected() {
        let m = Matrix::from_rows(&[vec![1.0], vec![f64::NAN]]).unwrap();
        assert_eq!(RawCovariates::new(m).unwrap_err(), Error::NonFiniteInput);
    }

    #[test]
    fn hat_identities() {
        let d = center_and_reduce(&random_raw(15, 4, 3), DEFAULT_RANK_TOL).unwrap();
        let h = d.hat_matrix();
        let n = d.n();
        let tr: f64 = d.leverages().iter().sum();
        assert!((tr - 4.0).abs() < 1e-12);
        for i in 0..n {
            let row_sq: f64 = (0..n).map(|j| h[(i, j)] * h[(i, j)]).sum();
            assert!((row_sq - d.leverages()[i]).abs() < 1e-12);
            let row_sum: f64 = (0..n).map(|j| h[(i, j)]).sum();
            assert!(row_sum.abs() < 1e-12);
            assert!((h[(i, i)] - d.leverages()[i]).abs() < 1e-12);
        }
        assert!(d.kappa() >= 4.0 / n as f64 && d.kappa() <= 1.0);
    }

    #[test]
    fn orthonormalize_three_point() {
        let d = center_and_reduce(&raw(&[&[1.0], &[2.0], &[3.0]]), DEFAULT_RANK_TOL).unwrap();
        let o = orthonormalize(&d);
        assert!(o.is_orthonormal());
        let g = o.x().gram();
        assert!((g[(0, 0)] - 3.0).abs() < 1e-12);
        let col = o.x().column(0);
        let s = (1.5f64).sqrt();
        // scaled by sqrt(3/2), sign is arbitrary
        assert!(close(&col.iter().map(|v| v.abs()).collect::<Vec<_>>(), &[s, 0.0, s], 1e-12));
        assert!(close(o.leverages(), &[0.5, 0.0, 0.5], 1e-12));
    }

    #[test]
    fn orthonormalize_gram_and_hat() {
        let d = center_and_reduce(&random_raw(20, 3, 5), DEFAULT_RANK_TOL).unwrap();
        let o = orthonormalize(&d);
        let mut g = o.x().gram();
        g.scale(1.0 / 20.0);
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - target).abs() < 1e-10);
            }
        }
        let h1 = d.hat_matrix();
        let h2 = o.hat_matrix();
        for i in 0..20 {
            for j in 0..20 {
                assert!((h1[(i, j)] - h2[(i, j)]).abs() < 1e-10);
            }
        }
        assert!(close(d.leverages(), o.leverages(), 1e-10));
        // idempotent on orthonormal input
        let oo = orthonormalize(&o);
        assert!(close(o.leverages(), oo.leverages(), 1e-10));
    }

    #[test]
    fn trimming_examples() {
        let r = raw(&[&[1.0], &[2.0], &[100.0]]);
        assert_eq!(trim_columns(&r, 0.0, 1.0).unwrap(), r);
        let t = trim_columns(&r, 0.0, 2.0 / 3.0).unwrap();
        assert_eq!(t.matrix().column(0), vec![1.0, 2.0, 2.0]);
        assert!(matches!(trim_columns(&r, 0.5, 0.5), Err(Error::InvalidQuantilePair { .. })));
        assert!(matches!(trim_columns(&r, -0.1, 0.5), Err(Error::InvalidQuantilePair { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn leverages_invariant_under_column_mixing(seed in any::<u64>(), q in 1usize..5) {
            let r = random_raw(12, q, seed);
            let mut s = RngStream::new(seed, 99).sampler();
            // Random invertible A: identity plus a small perturbation keeps it well conditioned.
            let mut a = Matrix::identity(q);
            for i in 0..q { for j in 0..q { a[(i, j)] += 0.3 * s.normal(); } }
            let xa = r.matrix().matmul(&a).unwrap();
            let d1 = center_and_reduce(&r, DEFAULT_RANK_TOL).unwrap();
            let d2 = center_and_reduce(&RawCovariates::new(xa).unwrap(), DEFAULT_RANK_TOL).unwrap();
            prop_assume!(d2.p() == q);
            prop_assert!(close(d1.leverages(), d2.leverages(), 1e-9));
        }

        #[test]
        fn leverage_bounds(seed in any::<u64>(), n in 6usize..30, q in 1usize..5) {
            let d = center_and_reduce(&random_raw(n, q, seed), DEFAULT_RANK_TOL).unwrap();
            let p = d.p() as f64;
            let sum: f64 = d.leverages().iter().sum();
            prop_assert!((sum - p).abs() < 1e-8);
            prop_assert!(d.leverages().iter().all(|&h| (-1e-12..=1.0 + 1e-12).contains(&h)));
            prop_assert!(d.kappa() >= p / n as f64 - 1e-12 && d.kappa() <= 1.0 + 1e-12);
            for j in 0..d.p() {
                let s: f64 = d.x().column(j).iter().sum();
                prop_assert!(s.abs() < 1e-10 * n as f64 * d.x().max_abs().max(1.0));
            }
        }

        #[test]
        fn trimming_is_idempotent(seed in any::<u64>(), lo in 0.0f64..0.4, width in 0.1f64..0.6) {
            let r = random_raw(17, 3, seed);
            let once = trim_columns(&r, lo, lo + width).unwrap();
            let twice = trim_columns(&once, lo, lo + width).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}

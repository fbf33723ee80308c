//! Data-generating processes: synthetic heavy-tailed designs, linear
//! potential outcomes, the bias-maximizing residual and the recipe that
//! turns a real dataset into a simulation population.
//!
//! Every random draw is tied to a named stream of the `DgpSpec` seed, so
//! identical specs regenerate identical bytes:
//!
//! * design column `j` uses stream `DESIGN_COLUMN | j`, which makes a
//!   smaller design a column prefix of a larger one;
//! * `ε(t)` uses stream `NOISE | t`;
//! * column subsets of a dataset use stream `AUX | 2^41`.

use alloc::vec::Vec;

use crate::design::{center_and_reduce, DesignMatrix, RawCovariates, DEFAULT_RANK_TOL};
use crate::linalg::{dot, norm2, HouseholderQr, Matrix};
use crate::population::PotentialOutcomes;
use crate::rng::{domain, RngStream, Sampler};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignDist {
    Normal,
    T2,
    T1,
    /// Covariates come from a loaded dataset.
    Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseDist {
    Normal,
    T2,
    T1,
    WorstCase,
}

fn draw(s: &mut Sampler, dof: Option<u32>) -> f64 {
    match dof {
        None => s.normal(),
        Some(k) => s.student_t(k),
    }
}

fn design_dof(dist: DesignDist) -> Result<Option<u32>> {
    match dist {
        DesignDist::Normal => Ok(None),
        DesignDist::T2 => Ok(Some(2)),
        DesignDist::T1 => Ok(Some(1)),
        DesignDist::Dataset => Err(Error::InvalidSpec("dataset designs are loaded, not sampled")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub n: usize,
    /// `p = ceil(n^gamma)`.
    pub gamma: f64,
    pub design_dist: DesignDist,
    pub noise_dist: NoiseDist,
    pub pi1: f64,
    pub sigma1: f64,
    pub sigma0: f64,
    /// Empty means zero.
    pub beta1_star: Vec<f64>,
    pub beta0_star: Vec<f64>,
    pub seed: u64,
}

impl DgpSpec {
    pub fn new(n: usize, gamma: f64, design_dist: DesignDist, noise_dist: NoiseDist, pi1: f64, seed: u64) -> Self {
        Self {
            n,
            gamma,
            design_dist,
            noise_dist,
            pi1,
            sigma1: 1.0,
            sigma0: 1.0,
            beta1_star: Vec::new(),
            beta0_star: Vec::new(),
            seed,
        }
    }

    pub fn p(&self) -> usize {
        dimension_for(self.n, self.gamma)
    }

    /// `floor(n pi1)`.
    pub fn n1(&self) -> usize {
        libm::floor(self.n as f64 * self.pi1) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidSpec("gamma must be a finite non-negative number"));
        }
        if !(self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(Error::InvalidSpec("pi1 must be in (0, 1)"));
        }
        if !(self.sigma1 >= 0.0 && self.sigma0 >= 0.0) {
            return Err(Error::InvalidSpec("noise scales must be non-negative"));
        }
        if self.n < 5 || self.p() + 4 > self.n {
            return Err(Error::DegenerateDf { n: self.n, p: self.p() });
        }
        let n1 = self.n1();
        if n1 < 1 || n1 >= self.n {
            return Err(Error::InvalidArmSizes { n: self.n, n1 });
        }
        Ok(())
    }
}

/// `ceil(n^gamma)`, guarded against `n^gamma` landing a hair above an integer.
pub fn dimension_for(n: usize, gamma: f64) -> usize {
    (libm::ceil(libm::pow(n as f64, gamma) - 1e-9) as usize).max(1)
}

/// `n x p` matrix of i.i.d. draws from `dist`.
pub fn synthetic_design(n: usize, p: usize, dist: DesignDist, seed: u64) -> Result<RawCovariates> {
    if p > n {
        return Err(Error::DegenerateDf { n, p });
    }
    let dof = design_dof(dist)?;
    let columns: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let mut s = RngStream::new(seed, domain::DESIGN_COLUMN | j as u64).sampler();
            (0..n).map(|_| draw(&mut s, dof)).collect()
        })
        .collect();
    RawCovariates::new(Matrix::from_columns(&columns)?)
}

/// I.i.d. noise vector for arm `arm` (`None` for the worst case, which is not random).
pub fn iid_noise(n: usize, dist: NoiseDist, seed: u64, arm: u8) -> Option<Vec<f64>> {
    let dof = match dist {
        NoiseDist::Normal => None,
        NoiseDist::T2 => Some(2),
        NoiseDist::T1 => Some(1),
        NoiseDist::WorstCase => return None,
    };
    let mut s = RngStream::new(seed, domain::NOISE | arm as u64).sampler();
    Some((0..n).map(|_| draw(&mut s, dof)).collect())
}

/// `(ε(1), ε(0))` for a design; the worst case uses `(2ε, ε)`.
pub fn noise_pair(d: &DesignMatrix, dist: NoiseDist, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    match dist {
        NoiseDist::WorstCase => {
            let e = worst_case_residual(d)?;
            Ok((e.iter().map(|v| 2.0 * v).collect(), e))
        }
        _ => Ok((
            iid_noise(d.n(), dist, seed, 1).expect("iid"),
            iid_noise(d.n(), dist, seed, 0).expect("iid"),
        )),
    }
}

fn linear_part(x: &Matrix, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.is_empty() {
        return Ok(alloc::vec![0.0; x.rows()]);
    }
    if beta.len() != x.cols() {
        return Err(Error::DimensionMismatch { expected: x.cols(), got: beta.len() });
    }
    x.mul_vec(beta)
}

/// `Y(t) = X β_t* + σ_t ε(t)` with `X` the centered design of `d`.
pub fn linear_outcomes(d: &DesignMatrix, spec: &DgpSpec) -> Result<PotentialOutcomes> {
    let (eps1, eps0) = noise_pair(d, spec.noise_dist, spec.seed)?;
    let m1 = linear_part(d.x(), &spec.beta1_star)?;
    let m0 = linear_part(d.x(), &spec.beta0_star)?;
    let y1 = m1.iter().zip(&eps1).map(|(m, e)| m + spec.sigma1 * e).collect();
    let y0 = m0.iter().zip(&eps0).map(|(m, e)| m + spec.sigma0 * e).collect();
    PotentialOutcomes::new(y1, y0)
}

/// `sqrt(n) r / ‖r‖` with `r` the residual of the leverage vector on `[1, X]`.
/// Among vectors orthogonal to `1` and `X` with `‖ε‖² = n` it maximizes
/// `|Σ H_ii ε_i|`.
pub fn worst_case_residual(d: &DesignMatrix) -> Result<Vec<f64>> {
    let h = d.leverages();
    let r = d.residual_with_intercept(h);
    let rn = norm2(&r);
    if !(rn > 1e-10 * norm2(h)) {
        return Err(Error::DegenerateLeverages);
    }
    let scale = libm::sqrt(d.n() as f64) / rn;
    Ok(r.iter().map(|v| v * scale).collect())
}

/// `n0/n1 Δ1 - n1/n0 Δ0` with `Δt = n⁻¹ Σ H_ii e_i(t)`: the leading bias of
/// the adjusted estimator. With `e(1) = 2ε`, `e(0) = ε` it is
/// `(2 n0/n1 - n1/n0) Σ H_ii ε_i / n`.
pub fn leverage_bias_term(d: &DesignMatrix, e1: &[f64], e0: &[f64], n1: usize, n0: usize) -> f64 {
    let n = d.n() as f64;
    let d1 = dot(d.leverages(), e1) / n;
    let d0 = dot(d.leverages(), e0) / n;
    n0 as f64 / n1 as f64 * d1 - n1 as f64 / n0 as f64 * d0
}

/// Appends every pairwise product `x_j x_k` (`j < k`) after the original columns.
pub fn pairwise_interactions(raw: &RawCovariates) -> Result<RawCovariates> {
    let cols = raw.matrix().columns();
    let mut out = cols.clone();
    for j in 0..cols.len() {
        for k in j + 1..cols.len() {
            out.push(cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).collect());
        }
    }
    RawCovariates::new(Matrix::from_columns(&out)?)
}

/// A real dataset prepared for simulation: per-arm OLS coefficients and
/// residual scales of the observed outcome on the covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub name: alloc::string::String,
    /// Non-collinear, non-constant columns only.
    pub covariates: RawCovariates,
    /// Positions of `covariates` columns in the input matrix.
    pub source_columns: Vec<usize>,
    pub fitted_beta1: Vec<f64>,
    pub fitted_beta0: Vec<f64>,
    pub fitted_sigma1: f64,
    pub fitted_sigma0: f64,
    pub n: usize,
    pub n1: usize,
}

fn arm_ols(x: &Matrix, y: &[f64], rows: &[usize]) -> Result<(Vec<f64>, f64)> {
    let q = x.cols();
    let n_t = rows.len();
    let mut design = Matrix::zeros(n_t, q + 1);
    for (r, &i) in rows.iter().enumerate() {
        design[(r, 0)] = 1.0;
        for j in 0..q {
            design[(r, j + 1)] = x[(i, j)];
        }
    }
    let yt: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let qr = HouseholderQr::new(&design, DEFAULT_RANK_TOL);
    if qr.rank() == 0 || !qr.kept().contains(&0) || n_t <= qr.rank() {
        return Err(Error::ArmTooSmall { arm: 0, n_t, needed: qr.rank() + 1 });
    }
    let coef = qr.solve(&yt)?;
    // Aliased columns in this arm get a zero coefficient.
    let mut beta = alloc::vec![0.0; q];
    for (c, &k) in coef.iter().zip(qr.kept()) {
        if k > 0 {
            beta[k - 1] = *c;
        }
    }
    let rss: f64 = qr.residual(&yt).iter().map(|e| e * e).sum();
    Ok((beta, libm::sqrt(rss / (n_t - qr.rank()) as f64)))
}

/// Drops constant and collinear columns, then fits `y` on `[1, X]` in each arm.
pub fn fit_dataset(name: &str, raw: &RawCovariates, y: &[f64], treated: &[bool]) -> Result<DatasetBundle> {
    let n = raw.n();
    if y.len() != n || treated.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len().min(treated.len()) });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let kept = center_and_reduce(raw, DEFAULT_RANK_TOL)?.kept_columns().to_vec();
    let covariates = raw.select_columns(&kept)?;
    let rows1: Vec<usize> = (0..n).filter(|&i| treated[i]).collect();
    let rows0: Vec<usize> = (0..n).filter(|&i| !treated[i]).collect();
    if rows1.is_empty() || rows0.is_empty() {
        return Err(Error::EmptyArm);
    }
    let tag = |arm: u8| move |e: Error| match e {
        Error::ArmTooSmall { n_t, needed, .. } => Error::ArmTooSmall { arm, n_t, needed },
        other => other,
    };
    let (fitted_beta1, fitted_sigma1) = arm_ols(covariates.matrix(), y, &rows1).map_err(tag(1))?;
    let (fitted_beta0, fitted_sigma0) = arm_ols(covariates.matrix(), y, &rows0).map_err(tag(0))?;
    Ok(DatasetBundle {
        name: name.into(),
        covariates,
        source_columns: kept,
        fitted_beta1,
        fitted_beta0,
        fitted_sigma1,
        fitted_sigma0,
        n,
        n1: rows1.len(),
    })
}

/// Uniform size-`p` subset of `0..q`, sorted, drawn from the seed's subset stream.
pub fn draw_column_subset(q: usize, p: usize, seed: u64) -> Result<Vec<usize>> {
    if p > q {
        return Err(Error::InvalidSubsetSize { n: q, m: p });
    }
    let mut s = RngStream::new(seed, domain::AUX | (1 << 41)).sampler();
    let mut idx: Vec<usize> = (0..q).collect();
    for i in 0..p {
        let j = i + s.below((q - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(p);
    idx.sort_unstable();
    Ok(idx)
}

impl DatasetBundle {
    /// Simulation population on the column subset `cols`:
    /// `Y(t) = X_S β̂_t[S] + (σ̂_t / 2) ε(t)`, with the design re-centered and
    /// re-reduced for the subset.
    pub fn population(&self, cols: &[usize], noise: NoiseDist, seed: u64) -> Result<(RawCovariates, DesignMatrix, PotentialOutcomes)> {
        let raw = self.covariates.select_columns(cols)?;
        let d = center_and_reduce(&raw, DEFAULT_RANK_TOL)?;
        let (eps1, eps0) = noise_pair(&d, noise, seed)?;
        let po = self.outcomes_with_noise(cols, &eps1, &eps0)?;
        Ok((raw, d, po))
    }

    /// `X_S β̂_t[S] + (σ̂_t / 2) ε(t)` for given noise vectors.
    pub fn outcomes_with_noise(&self, cols: &[usize], eps1: &[f64], eps0: &[f64]) -> Result<PotentialOutcomes> {
        if eps1.len() != self.n || eps0.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: eps1.len().min(eps0.len()) });
        }
        if let Some(&c) = cols.iter().find(|&&c| c >= self.covariates.q()) {
            return Err(Error::DimensionMismatch { expected: self.covariates.q(), got: c });
        }
        let x = self.covariates.matrix();
        let mut y1 = Vec::with_capacity(self.n);
        let mut y0 = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row = x.row(i);
            let m1: f64 = cols.iter().map(|&c| self.fitted_beta1[c] * row[c]).sum();
            let m0: f64 = cols.iter().map(|&c| self.fitted_beta0[c] * row[c]).sum();
            y1.push(m1 + 0.5 * self.fitted_sigma1 * eps1[i]);
            y0.push(m0 + 0.5 * self.fitted_sigma0 * eps0[i]);
        }
        PotentialOutcomes::new(y1, y0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::orthonormalize;
    use crate::estimators::{estimate, ObservedData};
    use crate::randomization::sample_assignment;
    use crate::stats::sample_variance;
    use crate::variance::{hc_variances, HcOptions};
    use alloc::vec;

    fn design(n: usize, p: usize, dist: DesignDist, seed: u64) -> DesignMatrix {
        center_and_reduce(&synthetic_design(n, p, dist, seed).unwrap(), DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn dimension_rule() {
        assert_eq!(dimension_for(2000, 0.5), 45);
        assert_eq!(dimension_for(500, 2.0 / 3.0), 63);
        assert_eq!(dimension_for(1000, 0.3), 8);
        assert_eq!(dimension_for(100, 0.5), 10);
        assert_eq!(dimension_for(500, 0.0), 1);
        let spec = DgpSpec::new(500, 0.5, DesignDist::T2, NoiseDist::Normal, 0.2, 1);
        assert_eq!((spec.p(), spec.n1()), (23, 100));
        assert!(spec.validate().is_ok());
        let bad = DgpSpec::new(20, 1.0, DesignDist::T2, NoiseDist::Normal, 0.2, 1);
        assert!(matches!(bad.validate(), Err(Error::DegenerateDf { .. })));
        let bad = DgpSpec::new(20, 0.5, DesignDist::T2, NoiseDist::Normal, 1.0, 1);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn normal_design_moments() {
        let n = 100_000;
        let x = synthetic_design(n, 1, DesignDist::Normal, 77).unwrap().matrix().column(0);
        let m = crate::linalg::mean(&x);
        assert!(m.abs() < 4.0 / libm::sqrt(n as f64));
        assert!((sample_variance(&x) - 1.0).abs() < 0.05);
    }

    #[test]
    fn prefix_property_and_determinism() {
        let small = synthetic_design(50, 3, DesignDist::T2, 9).unwrap();
        let large = synthetic_design(50, 7, DesignDist::T2, 9).unwrap();
        assert_eq!(large.select_columns(&[0, 1, 2]).unwrap(), small);
        assert_eq!(synthetic_design(50, 7, DesignDist::T2, 9).unwrap(), large);
        assert_ne!(synthetic_design(50, 7, DesignDist::T2, 10).unwrap(), large);
        assert!(synthetic_design(5, 1, DesignDist::Dataset, 0).is_err());
    }

    #[test]
    fn cauchy_tails_heavier_than_normal() {
        let n = 20_000;
        let q999 = |dist| {
            let mut v = synthetic_design(n, 1, dist, 5).unwrap().matrix().column(0);
            v.sort_by(f64::total_cmp);
            v[(0.999 * n as f64) as usize]
        };
        assert!(q999(DesignDist::T1) > q999(DesignDist::Normal));
        assert!(q999(DesignDist::T2) > q999(DesignDist::Normal));
    }

    #[test]
    fn outcome_examples() {
        let d = design(40, 3, DesignDist::Normal, 1);
        let mut spec = DgpSpec::new(40, 0.3, DesignDist::Normal, NoiseDist::T2, 0.5, 3);
        spec.sigma1 = 0.0;
        spec.sigma0 = 0.0;
        spec.beta1_star = vec![1.0, -2.0, 0.5];
        spec.beta0_star = spec.beta1_star.clone();
        let po = linear_outcomes(&d, &spec).unwrap();
        assert!(po.tau().abs() < 1e-14);
        assert_eq!(po.y1(), d.x().mul_vec(&spec.beta1_star).unwrap().as_slice());

        let spec = DgpSpec::new(40, 0.3, DesignDist::Normal, NoiseDist::Normal, 0.5, 3);
        let po = linear_outcomes(&d, &spec).unwrap();
        let e1 = iid_noise(40, NoiseDist::Normal, 3, 1).unwrap();
        let e0 = iid_noise(40, NoiseDist::Normal, 3, 0).unwrap();
        assert!((po.tau() - (crate::linalg::mean(&e1) - crate::linalg::mean(&e0))).abs() < 1e-14);
        assert_eq!(linear_outcomes(&d, &spec).unwrap(), po);
        spec_mismatch(&d);
    }

    fn spec_mismatch(d: &DesignMatrix) {
        let mut spec = DgpSpec::new(40, 0.3, DesignDist::Normal, NoiseDist::Normal, 0.5, 3);
        spec.beta1_star = vec![1.0];
        assert!(matches!(linear_outcomes(d, &spec), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn estimates_invariant_to_beta_star() {
        let n = 60;
        let d = design(n, 4, DesignDist::T2, 21);
        let base = DgpSpec::new(n, 0.3, DesignDist::T2, NoiseDist::T2, 0.4, 21);
        let mut shifted = base.clone();
        let mut s = RngStream::new(1, 1).sampler();
        shifted.beta1_star = (0..4).map(|_| 3.0 * s.normal()).collect();
        shifted.beta0_star = (0..4).map(|_| 3.0 * s.normal()).collect();
        let a = linear_outcomes(&d, &base).unwrap();
        let b = linear_outcomes(&d, &shifted).unwrap();
        for k in 0..20 {
            let asg = sample_assignment(n, 24, RngStream::new(2, k)).unwrap();
            let run = |po: &PotentialOutcomes| {
                let obs = ObservedData::new(po.observe(&asg.mask()), asg.clone(), &d).unwrap();
                let (f1, f0, est) = estimate(&obs).unwrap();
                (est, hc_variances(&f1, &f0, HcOptions::default()).unwrap())
            };
            let (ea, va) = run(&a);
            let (eb, vb) = run(&b);
            // τ̂ - τ is invariant; τ itself shifts with β*.
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-8 * (1.0 + x.abs().max(y.abs()));
            assert!(close(ea.tau_adj - a.tau(), eb.tau_adj - b.tau()));
            assert!(close(ea.tau_adj_de - a.tau(), eb.tau_adj_de - b.tau()));
            for kind in crate::variance::HcKind::ALL {
                assert!(close(va.get(kind), vb.get(kind)));
            }
        }
    }

    #[test]
    fn worst_case_constraints_and_fixed_point() {
        for seed in 0..10 {
            let d = design(80, 6, DesignDist::T2, seed);
            let e = worst_case_residual(&d).unwrap();
            let n = 80.0;
            assert!(e.iter().sum::<f64>().abs() < 1e-8);
            for c in d.x().tr_mul_vec(&e).unwrap() {
                assert!(c.abs() < 1e-8);
            }
            assert!((dot(&e, &e) / n - 1.0).abs() < 1e-8);
            let again = d.residual_with_intercept(&e);
            for (a, b) in again.iter().zip(&e) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn worst_case_degenerate_on_constant_leverage() {
        // Orthogonal +-1 columns on 8 points: every leverage is 2/8.
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }, if (i / 2) % 2 == 0 { 1.0 } else { -1.0 }])
            .collect();
        let d = center_and_reduce(&RawCovariates::from_rows(&rows).unwrap(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(worst_case_residual(&d), Err(Error::DegenerateLeverages));
    }

    #[test]
    fn worst_case_beats_random_feasible_vectors() {
        let d = design(100, 8, DesignDist::T2, 4);
        let e = worst_case_residual(&d).unwrap();
        let best = dot(d.leverages(), &e).abs();
        let mut s = RngStream::new(8, 8).sampler();
        for _ in 0..200 {
            let z: Vec<f64> = (0..100).map(|_| s.normal()).collect();
            let r = d.residual_with_intercept(&z);
            let scale = 10.0 / norm2(&r);
            let v: Vec<f64> = r.iter().map(|x| x * scale).collect();
            assert!(dot(d.leverages(), &v).abs() <= best + 1e-12);
        }
    }

    #[test]
    fn worst_case_invariant_to_orthonormalization() {
        let d = design(60, 5, DesignDist::T1, 2);
        let a = worst_case_residual(&d).unwrap();
        let b = worst_case_residual(&orthonormalize(&d)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn worst_case_bias_amplified_by_imbalance() {
        let d = design(500, 23, DesignDist::T2, 6);
        let e = worst_case_residual(&d).unwrap();
        let e1: Vec<f64> = e.iter().map(|v| 2.0 * v).collect();
        let s = dot(d.leverages(), &e) / 500.0;
        let b02 = leverage_bias_term(&d, &e1, &e, 100, 400);
        assert!((b02 - (2.0 * 4.0 - 0.25) * s).abs() < 1e-12);
        let b05 = leverage_bias_term(&d, &e1, &e, 250, 250);
        assert!(b02.abs() > b05.abs());
    }

    #[test]
    fn dataset_recipe() {
        let n = 120;
        let base = synthetic_design(n, 3, DesignDist::Normal, 31).unwrap();
        // a constant column and an exact duplicate are removed
        let mut cols = base.matrix().columns();
        cols.push(vec![2.0; n]);
        cols.push(cols[0].clone());
        let raw = RawCovariates::new(Matrix::from_columns(&cols).unwrap()).unwrap();
        let expanded = pairwise_interactions(&raw).unwrap();
        assert_eq!(expanded.q(), 5 + 10);
        let treated: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let mut s = RngStream::new(4, 4).sampler();
        let y: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * cols[1][i] + 0.5 * s.normal()).collect();
        let b = fit_dataset("toy", &raw, &y, &treated).unwrap();
        assert_eq!(b.source_columns, vec![0, 1, 2]);
        assert_eq!((b.n, b.n1, b.covariates.q()), (n, 40, 3));
        assert!((b.fitted_beta1[1] - 2.0).abs() < 0.3 && (b.fitted_beta0[1] - 2.0).abs() < 0.3);
        assert!((b.fitted_sigma0 - 0.5).abs() < 0.15);

        let subset = draw_column_subset(3, 2, 11).unwrap();
        assert_eq!(subset, draw_column_subset(3, 2, 11).unwrap());
        let (rawsub, d, po) = b.population(&subset, NoiseDist::Normal, 11).unwrap();
        assert_eq!((rawsub.q(), d.p(), po.n()), (2, 2, n));
        let (_, _, wc) = b.population(&subset, NoiseDist::WorstCase, 11).unwrap();
        assert_eq!(wc.n(), n);
        assert!(draw_column_subset(3, 4, 0).is_err());
    }

    #[test]
    fn column_subsets_are_uniform() {
        let mut counts = [0u32; 5];
        for seed in 0..5000 {
            for j in draw_column_subset(5, 2, seed).unwrap() {
                counts[j] += 1;
            }
        }
        // each column appears with probability 2/5
        for c in counts {
            assert!((c as f64 - 2000.0).abs() < 4.0 * libm::sqrt(5000.0 * 0.4 * 0.6));
        }
    }
}

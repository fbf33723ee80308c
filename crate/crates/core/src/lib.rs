//! Design-based regression adjustment for completely randomized experiments.
//!
//! Covariates and potential outcomes are fixed; the only randomness is the
//! treatment assignment, a uniformly drawn size-`n1` subset of the `n` units.
//! This crate holds the numerical core:
//!
//! * [`design`]: centering, rank reduction, leverage scores, trimming.
//! * [`population`]: population OLS targets, potential residuals and the
//!   diagnostic quantities (`kappa`, `E2`, `E_inf`, `rho_e`, `Delta_t`, `sigma_n^2`).
//! * [`randomization`]: seeded sampling and lexicographic enumeration of assignments.
//! * [`estimators`]: difference in means, fixed-coefficient adjustment, Lin's
//!   interacted estimator, and the leverage-debiased variant.
//! * [`variance`]: HC0-HC3 variance estimators and Wald intervals.
//! * [`srs_moments`]: exact moments under sampling without replacement, brute
//!   force oracles and concentration-bound validators.
//! * [`dgp`]: synthetic designs, linear and worst-case potential outcomes.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(rust_2018_idioms)]
// `!(x > t)` is used on purpose so that NaN lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod design;
pub mod dgp;
mod error;
pub mod estimators;
pub mod linalg;
pub mod population;
pub mod randomization;
pub mod rng;
pub mod srs_moments;
pub mod stats;
pub mod variance;

pub use error::{Error, Result};

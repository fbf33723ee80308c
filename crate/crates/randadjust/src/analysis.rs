//! One-shot analysis of an observed experiment and design diagnostics.

use serde::Serialize;

use randadjust_core::design::{center_and_reduce, trim_columns, DesignMatrix, RawCovariates, DEFAULT_RANK_TOL};
use randadjust_core::estimators::{estimate, ObservedData};
use randadjust_core::randomization::Assignment;
use randadjust_core::variance::{hc_variances, wald_interval, HcKind, HcOptions};

use crate::dataset::Table;
use crate::error::AppResult;
use crate::output::format_g;

/// Default per-column trimming quantiles used for the diagnostic comparison.
pub const DEFAULT_TRIM: [f64; 2] = [0.025, 0.975];

#[derive(Debug, Clone, Serialize)]
pub struct Interval {
    pub estimator: &'static str,
    pub var_estimator: &'static str,
    pub se: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub n: usize,
    pub n1: usize,
    pub n0: usize,
    pub p: usize,
    pub covariates: Vec<String>,
    pub dropped_columns: Vec<String>,
    pub trim: Option<[f64; 2]>,
    pub tau_unadj: f64,
    pub tau_adj: f64,
    pub tau_adj_de: f64,
    pub delta_hat1: f64,
    pub delta_hat0: f64,
    /// Variance estimates of `sqrt(n) (tau_hat - tau)`.
    pub hc0: f64,
    pub hc1: f64,
    pub hc2: f64,
    pub hc3: f64,
    pub level: f64,
    pub intervals: Vec<Interval>,
    pub kappa: f64,
    pub p_over_n: f64,
    pub max_arm_leverage: f64,
    pub arm_condition: [f64; 2],
}

fn split_kept(names: &[String], d: &DesignMatrix) -> (Vec<String>, Vec<String>) {
    let kept: Vec<String> = d.kept_columns().iter().map(|&j| names[j].clone()).collect();
    let dropped = names.iter().filter(|n| !kept.contains(n)).cloned().collect();
    (kept, dropped)
}

fn prepare(raw: &RawCovariates, trim: Option<[f64; 2]>) -> AppResult<DesignMatrix> {
    let raw = match trim {
        Some([l, u]) => trim_columns(raw, l, u)?,
        None => raw.clone(),
    };
    Ok(center_and_reduce(&raw, DEFAULT_RANK_TOL)?)
}

pub fn analyze(
    table: &Table,
    outcome: &str,
    treat: &str,
    covariates: Option<&[String]>,
    trim: Option<[f64; 2]>,
    level: f64,
) -> AppResult<AnalyzeReport> {
    let y = table.column(outcome)?.to_vec();
    let mask = table.treatment(treat)?;
    let (names, raw) = table.covariates(covariates, &[outcome, treat])?;
    let d = prepare(&raw, trim)?;
    let asg = Assignment::from_mask(&mask);
    let (n, n1, n0) = (asg.n(), asg.n1(), asg.n0());
    let obs = ObservedData::new(y, asg, &d)?;
    let (f1, f0, est) = estimate(&obs)?;
    let v = hc_variances(&f1, &f0, HcOptions::default())?;
    let mut intervals = Vec::new();
    for (name, tau) in [("adj", est.tau_adj), ("adj_de", est.tau_adj_de)] {
        for (kind, label) in HcKind::ALL.into_iter().zip(["hc0", "hc1", "hc2", "hc3"]) {
            let var = v.get(kind);
            let w = wald_interval(tau, var, n, level)?;
            intervals.push(Interval {
                estimator: name,
                var_estimator: label,
                se: (var / n as f64).sqrt(),
                lower: w.lower,
                upper: w.upper,
            });
        }
    }
    let (kept, dropped) = split_kept(&names, &d);
    let max_arm = f1.arm_leverages.iter().chain(&f0.arm_leverages).fold(0.0f64, |m, &h| m.max(h));
    Ok(AnalyzeReport {
        n,
        n1,
        n0,
        p: d.p(),
        covariates: kept,
        dropped_columns: dropped,
        trim,
        tau_unadj: est.tau_unadj,
        tau_adj: est.tau_adj,
        tau_adj_de: est.tau_adj_de,
        delta_hat1: est.delta_hat1,
        delta_hat0: est.delta_hat0,
        hc0: v.hc0,
        hc1: v.hc1,
        hc2: v.hc2,
        hc3: v.hc3,
        level,
        intervals,
        kappa: d.kappa(),
        p_over_n: d.p() as f64 / n as f64,
        max_arm_leverage: max_arm,
        arm_condition: [f1.gram_condition, f0.gram_condition],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub n: usize,
    pub p: usize,
    pub covariates: Vec<String>,
    pub dropped_columns: Vec<String>,
    pub kappa: f64,
    pub p_over_n: f64,
    /// `kappa n / p`; 1 means perfectly balanced leverages.
    pub kappa_ratio: f64,
    pub max_leverage_unit: usize,
    pub kappa_log_p: f64,
    pub kappa_p: f64,
    pub kappa2_p_log_p: f64,
    /// `kappa` after clipping each column at its 2.5% and 97.5% quantiles.
    pub kappa_trimmed: f64,
    pub units_above_2p_over_n: usize,
}

pub fn diagnose(table: &Table, covariates: Option<&[String]>, exclude: &[&str]) -> AppResult<(DiagnoseReport, Vec<f64>)> {
    let (names, raw) = table.covariates(covariates, exclude)?;
    let d = prepare(&raw, None)?;
    let trimmed = prepare(&raw, Some(DEFAULT_TRIM))?;
    let (n, p) = (d.n(), d.p());
    let (pf, nf) = (p as f64, n as f64);
    let kappa = d.kappa();
    let log_p = if p > 0 { pf.ln() } else { 0.0 };
    let h = d.leverages().to_vec();
    let max_unit = h.iter().enumerate().fold(0, |best, (i, &v)| if v > h[best] { i } else { best });
    let (kept, dropped) = split_kept(&names, &d);
    let report = DiagnoseReport {
        n,
        p,
        covariates: kept,
        dropped_columns: dropped,
        kappa,
        p_over_n: pf / nf,
        kappa_ratio: if p > 0 { kappa * nf / pf } else { f64::NAN },
        max_leverage_unit: max_unit,
        kappa_log_p: kappa * log_p,
        kappa_p: kappa * pf,
        kappa2_p_log_p: kappa * kappa * pf * log_p,
        kappa_trimmed: trimmed.kappa(),
        units_above_2p_over_n: h.iter().filter(|&&v| v > 2.0 * pf / nf).count(),
    };
    Ok((report, h))
}

/// Equal-width histogram of leverages on `[0, max]` as CSV.
pub fn leverage_histogram(h: &[f64], bins: usize) -> String {
    let bins = bins.max(1);
    let top = h.iter().fold(0.0f64, |m, &v| m.max(v));
    let width = if top > 0.0 { top / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in h {
        counts[((v / width) as usize).min(bins - 1)] += 1;
    }
    let mut out = String::from("bin_lower,bin_upper,count\n");
    for (k, c) in counts.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", format_g(k as f64 * width), format_g((k + 1) as f64 * width), c));
    }
    out
}

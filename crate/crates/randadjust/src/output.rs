//! Metrics CSV: fixed header, canonical row order, six significant digits, LF.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{Estimator, VarEstimator};
use crate::error::{AppError, AppResult};
use crate::harness::{sort_rows, CellResult, MetricsRow};

pub const METRICS_HEADER: &str = "gamma,p,estimator,var_estimator,rel_bias,sdr,coverage,dropped,kappa,seed_count";

pub const CELLS_HEADER: &str =
    "gamma,p,seed,n1,estimator,var_estimator,rel_bias,sdr,coverage,z_coverage,dropped,kappa,tau,sigma_n2,bias_term";

/// `printf("%.6g")`.
pub fn format_g(x: f64) -> String {
    const SIG: i32 = 6;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // The exponent after rounding decides between fixed and scientific.
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..SIG).contains(&exp) {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (SIG - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn parse_real(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            format_g(r.gamma),
            r.p,
            r.estimator.name(),
            r.var_estimator.name(),
            format_g(r.rel_bias),
            format_g(r.sdr),
            format_g(r.coverage),
            r.dropped,
            format_g(r.kappa),
            r.seed_count
        )
        .expect("write to string");
    }
    out
}

pub fn emit_csv(rows: &[MetricsRow], path: &Path) -> AppResult<()> {
    std::fs::write(path, metrics_csv(rows)).map_err(|e| AppError::io(path, e))
}

pub fn parse_metrics(text: &str) -> AppResult<Vec<MetricsRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(AppError::Parse { line: 1, column: String::new(), message: "unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let f: Vec<&str> = line.split(',').collect();
        let err = |column: &str| AppError::Parse { line: lineno, column: column.into(), message: "invalid value".into() };
        if f.len() != 10 {
            return Err(AppError::Parse { line: lineno, column: String::new(), message: "expected 10 fields".into() });
        }
        rows.push(MetricsRow {
            gamma: parse_real(f[0]).ok_or_else(|| err("gamma"))?,
            p: f[1].parse().map_err(|_| err("p"))?,
            estimator: Estimator::parse(f[2]).ok_or_else(|| err("estimator"))?,
            var_estimator: VarEstimator::parse(f[3]).ok_or_else(|| err("var_estimator"))?,
            rel_bias: parse_real(f[4]).ok_or_else(|| err("rel_bias"))?,
            sdr: parse_real(f[5]).ok_or_else(|| err("sdr"))?,
            coverage: parse_real(f[6]).ok_or_else(|| err("coverage"))?,
            dropped: f[7].parse().map_err(|_| err("dropped"))?,
            kappa: parse_real(f[8]).ok_or_else(|| err("kappa"))?,
            seed_count: f[9].parse().map_err(|_| err("seed_count"))?,
        });
    }
    Ok(rows)
}

/// Per-seed cell metrics, including z-score coverage and population quantities.
pub fn cells_csv(cells: &[CellResult]) -> String {
    let mut out = String::from(CELLS_HEADER);
    out.push('\n');
    for c in cells {
        for m in &c.metrics {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                format_g(c.gamma),
                c.p,
                c.seed,
                c.n1,
                m.estimator.name(),
                m.var_estimator.name(),
                format_g(m.rel_bias),
                format_g(m.sdr),
                format_g(m.coverage),
                format_g(m.z_coverage),
                c.dropped,
                format_g(c.kappa),
                format_g(c.tau),
                format_g(c.sigma_n2),
                format_g(c.bias_term)
            )
            .expect("write to string");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printf_g_format() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.95, "0.95"),
            (1.0 / 3.0, "0.333333"),
            (123456.0, "123456"),
            (1234567.0, "1.23457e+06"),
            (999999.7, "1e+06"),
            (0.0001, "0.0001"),
            (0.00001234567, "1.23457e-05"),
            (-2.5, "-2.5"),
            (0.9999996, "1"),
            (100.0, "100"),
            (f64::NAN, "nan"),
            (f64::INFINITY, "inf"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g(x), s, "{x}");
        }
    }

    fn row(gamma: f64, e: Estimator, v: VarEstimator) -> MetricsRow {
        MetricsRow {
            gamma,
            p: 3,
            estimator: e,
            var_estimator: v,
            rel_bias: 0.0123456,
            sdr: 1.5,
            coverage: 0.9485,
            dropped: 0,
            kappa: f64::NAN,
            seed_count: 5,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(metrics_csv(&[]), format!("{METRICS_HEADER}\n"));
        assert!(parse_metrics(&metrics_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn rows_sorted_and_round_trip() {
        let rows = vec![
            row(0.5, Estimator::AdjDe, VarEstimator::Hc0),
            row(0.1, Estimator::Adj, VarEstimator::Theoretical),
            row(0.5, Estimator::Adj, VarEstimator::Hc3),
        ];
        let text = metrics_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("0.1,3,adj,theoretical"));
        assert!(lines[2].starts_with("0.5,3,adj,hc3"));
        assert!(lines[3].starts_with("0.5,3,adj_de,hc0"));
        assert!(!text.contains('\r'));
        let parsed = parse_metrics(&text).unwrap();
        assert_eq!(metrics_csv(&parsed), text);
        assert_eq!(parsed[0].coverage, 0.9485);
        assert!(parsed[0].kappa.is_nan());
        assert!(parse_metrics("bad\n").is_err());
    }
}

use std::path::Path;
use std::process::{Command, Output};

use randadjust::output::{parse_metrics, METRICS_HEADER};
use randadjust_core::rng::RngStream;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_randadjust"));
    c.env_remove("RANDADJUST_SEED");
    c
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn");
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn config(workers: usize, seed: u64) -> String {
    format!(
        r#"{{
  "dgp": {{"n": 80, "design_dist": "t2", "noise_dist": "t2", "pi1": 0.3, "seed": {seed}}},
  "gammas": [0.2, 0.4],
  "replicates": 60,
  "outer_seeds": 3,
  "estimators": ["unadj", "adj", "adj_de"],
  "workers": {workers}
}}"#
    )
}

fn simulate(dir: &Path, name: &str, cfg: &str, seed_env: Option<&str>) -> (String, String) {
    let cfg_path = dir.join(format!("{name}.json"));
    std::fs::write(&cfg_path, cfg).unwrap();
    let out = dir.join(name);
    let mut cmd = bin();
    cmd.args(["simulate", "--config"]).arg(&cfg_path).arg("--out").arg(&out);
    if let Some(s) = seed_env {
        cmd.env("RANDADJUST_SEED", s);
    }
    run(&mut cmd);
    (
        std::fs::read_to_string(out.join("metrics.csv")).unwrap(),
        std::fs::read_to_string(out.join("cells.csv")).unwrap(),
    )
}

#[test]
fn simulate_is_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let (m1, c1) = simulate(dir.path(), "w1", &config(1, 5), None);
    let (m8, c8) = simulate(dir.path(), "w8", &config(8, 5), None);
    assert_eq!(m1, m8);
    assert_eq!(c1, c8);
    assert!(m1.starts_with(METRICS_HEADER));
    let rows = parse_metrics(&m1).unwrap();
    // 2 gammas x 3 estimators x 5 variance estimators
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r.seed_count == 3 && r.dropped == 0));
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.coverage)));
    // 2 gammas x 3 seeds x 15 metric rows, plus header
    assert_eq!(c1.lines().count(), 1 + 90);
}

#[test]
fn seed_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let (from_env, _) = simulate(dir.path(), "env", &config(2, 5), Some("99"));
    let (explicit, _) = simulate(dir.path(), "explicit", &config(2, 99), None);
    let (original, _) = simulate(dir.path(), "orig", &config(2, 5), None);
    assert_eq!(from_env, explicit);
    assert_ne!(from_env, original);

    let cfg_path = dir.path().join("bad_seed.json");
    std::fs::write(&cfg_path, config(1, 5)).unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(dir.path().join("x"))
        .env("RANDADJUST_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"dgp": {"design_dist": "t2", "noise_dist": "normal"}, "replicats": 10}"#).unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&cfg_path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("replicats"));
}

fn write_experiment_csv(path: &Path, n: usize) {
    let mut s = RngStream::new(3, 3).sampler();
    let mut text = String::from("income,treated,age,educ,flag,const\n");
    for i in 0..n {
        let age = 20.0 + 10.0 * s.uniform();
        let educ = (8.0 + 8.0 * s.uniform()).floor();
        let flag = (s.uniform() < 0.3) as u8;
        let t = (i % 5 < 2) as u8;
        let y = 1000.0 + 50.0 * educ + 20.0 * age + 400.0 * t as f64 + 300.0 * s.normal();
        text.push_str(&format!("{y:.3},{t},{age:.4},{educ},{flag},1\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn analyze_reports_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("exp.csv");
    write_experiment_csv(&data, 200);
    let out = run(bin()
        .args(["analyze", "--data"])
        .arg(&data)
        .args(["--outcome", "income", "--treat", "treated", "--trim", "0.025,0.975"]));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 200);
    assert_eq!(v["n1"], 80);
    assert_eq!(v["p"], 3);
    assert_eq!(v["dropped_columns"], serde_json::json!(["const"]));
    assert_eq!(v["intervals"].as_array().unwrap().len(), 8);
    let tau = v["tau_adj"].as_f64().unwrap();
    assert!((tau - 400.0).abs() < 200.0, "{tau}");

    let missing = bin().args(["analyze", "--data"]).arg(&data).args(["--outcome", "wage", "--treat", "treated"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("wage"));
    let nonbinary = bin().args(["analyze", "--data"]).arg(&data).args(["--outcome", "income", "--treat", "age"]).output().unwrap();
    assert_eq!(nonbinary.status.code(), Some(2));
}

#[test]
fn diagnose_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("exp.csv");
    write_experiment_csv(&data, 150);
    let hist = dir.path().join("hist.csv");
    let out = run(bin()
        .args(["diagnose", "--data"])
        .arg(&data)
        .args(["--exclude", "income,treated", "--bins", "10", "--histogram"])
        .arg(&hist));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p"], 3);
    let kappa = v["kappa"].as_f64().unwrap();
    assert!((3.0 / 150.0..=1.0).contains(&kappa));
    let h = std::fs::read_to_string(&hist).unwrap();
    assert_eq!(h.lines().count(), 11);
    let total: usize = h.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 150);
}

#[test]
fn dataset_driven_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("exp.csv");
    write_experiment_csv(&data, 120);
    let cfg = format!(
        r#"{{
  "dgp": {{"design_dist": "dataset", "noise_dist": "worst_case",
           "dataset": {{"path": {:?}, "outcome": "income", "treat": "treated", "interactions": true}}}},
  "dims": [2, 4],
  "replicates": 40,
  "outer_seeds": 2,
  "workers": 2
}}"#,
        data
    );
    let (metrics, cells) = simulate(dir.path(), "ds", &cfg, None);
    let rows = parse_metrics(&metrics).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 5);
    assert!(rows.iter().any(|r| r.p == 4));
    // treated count comes from the data, not pi1
    assert!(cells.lines().skip(1).all(|l| l.split(',').nth(3) == Some("48")));
}

#[test]
fn oracle_check_fast() {
    let out = run(bin().args(["oracle-check", "--fast"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,status,detail\n"));
    assert_eq!(text.lines().filter(|l| l.contains(",pass,")).count(), 6);
}

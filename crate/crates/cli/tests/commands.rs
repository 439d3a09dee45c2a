use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridhedonic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn simulate(dir: &Path, config: Option<&str>) -> Output {
    let out = dir.join("data");
    let mut args = vec!["simulate", "--out", out.to_str().unwrap()];
    let path = dir.join("config.json");
    if let Some(text) = config {
        fs::write(&path, text).unwrap();
        args.extend(["--config", path.to_str().unwrap()]);
    }
    run(&args)
}

fn input_flags(dir: &Path) -> Vec<String> {
    let data = dir.join("data");
    vec![
        "--transactions".into(),
        data.join("transactions.csv").display().to_string(),
        "--waves".into(),
        data.join("waves.json").display().to_string(),
        "--rates".into(),
        data.join("rates.csv").display().to_string(),
    ]
}

fn run_on(dir: &Path, command: &str, out: &str, extra: &[&str]) -> Output {
    let out = dir.join(out).display().to_string();
    let mut args: Vec<String> = vec![command.into()];
    args.extend(input_flags(dir));
    args.extend(["--out".into(), out]);
    args.extend(extra.iter().map(|s| s.to_string()));
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn missing_rates_exits_2_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        simulate(dir.path(), Some(r#"{"transactions_per_group": 50}"#))
            .status
            .success()
    );
    fs::remove_file(dir.path().join("data/rates.csv")).unwrap();
    let out = run_on(dir.path(), "estimate", "est", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rates.csv"), "{err}");
}

#[test]
fn capacity_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), Some(r#"{"map_size": 60}"#));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), Some(r#"{"noise_sigma": "loud"}"#));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn estimate_recovers_truth_file_and_splits_meta() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"true_betas": {"post_near_multi": 0.0}}"#;
    assert!(simulate(dir.path(), Some(config)).status.success());
    let out = run_on(
        dir.path(),
        "estimate",
        "est",
        &["--treatment", "near", "--meta-cut", "2021-06-01"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Post * Near"));

    let truth: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("data/truth.json")).unwrap()).unwrap();
    let planted = truth["config"]["true_betas"]["post_near"].as_f64().unwrap();
    let fit: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("est/table3_col4.json")).unwrap())
            .unwrap();
    let c = fit["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["term"] == "post_x_near")
        .unwrap();
    let (est, se) = (
        c["estimate"].as_f64().unwrap(),
        c["std_error"].as_f64().unwrap(),
    );
    assert!(
        (est - planted).abs() <= 3.0 * se,
        "{est} ({se}) vs {planted}"
    );

    for part in ["pre", "post"] {
        assert!(dir
            .path()
            .join(format!("est/table6_near_{part}.csv"))
            .exists());
    }
    assert!(!dir.path().join("est/table6_logdist_pre.csv").exists());
    let combined: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("est/estimates.json")).unwrap()).unwrap();
    assert_eq!(combined.as_array().unwrap().len(), 4 + 1 + 2);
}

#[test]
fn flat_market_index_is_one_and_trend_has_every_day() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "true_betas": {"post": 0, "near": 0, "post_near": 0, "multi": 0, "post_multi": 0, "post_near_multi": 0},
        "gamma": {"log_lot_size": 0, "premium": 0, "log_btc": 0, "paid_sand": 0, "paid_weth": 0},
        "fe_scales": {"day": 0, "mint_wave": 0},
        "noise_sigma": 0,
        "transactions_per_group": 200,
        "background_transactions": 1000
    }"#;
    assert!(simulate(dir.path(), Some(config)).status.success());
    assert!(run_on(dir.path(), "index", "idx", &[]).status.success());
    let index = fs::read_to_string(dir.path().join("idx/index.csv")).unwrap();
    let mut lines = index.lines();
    assert_eq!(lines.next(), Some("period,value"));
    for line in lines {
        assert!(line.ends_with(",1"), "{line}");
    }

    assert!(run_on(dir.path(), "trend", "tr", &[]).status.success());
    let trend = fs::read_to_string(dir.path().join("tr/trend.csv")).unwrap();
    let rows: Vec<&str> = trend.lines().skip(1).collect();
    assert_eq!(rows.len(), 15 * 2);
    assert!(rows[0].starts_with("-7,near,"));
    assert!(rows[29].starts_with("7,far,"));
}

#[test]
fn unknown_treatment_is_a_usage_error() {
    let out = run(&["estimate", "--treatment", "far"]);
    assert_eq!(out.status.code(), Some(2));
}

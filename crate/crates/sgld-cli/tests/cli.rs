//! End-to-end checks of the command line interface: config handling, file
//! outputs, and the exit-code contract (0 pass, 1 violation, 2 config error,
//! 3 all diverged, 4 step size above the drift threshold).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sgld_cli::config::ExperimentConfig;

fn sgld() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sgld"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run_to_output(args: &[&str]) -> Output {
    sgld().args(args).output().expect("binary must run")
}

fn json_field<'a>(value: &'a serde_json::Value, pointer: &str) -> &'a serde_json::Value {
    value
        .pointer(pointer)
        .unwrap_or_else(|| panic!("missing {pointer}"))
}

#[test]
fn config_round_trip_is_identity() {
    let text = std::fs::read_to_string(repo_config("linear_tv.json")).unwrap();
    let parsed = ExperimentConfig::from_json(&text).unwrap();
    let reparsed = ExperimentConfig::from_json(&parsed.to_json()).unwrap();
    assert_eq!(parsed, reparsed);
}

#[test]
fn all_shipped_configs_parse() {
    for name in [
        "linear_run.json",
        "linear_check.json",
        "drift_demo.json",
        "minorize_demo.json",
        "linear_tv.json",
        "mlp_tamed.json",
    ] {
        let text = std::fs::read_to_string(repo_config(name)).unwrap();
        ExperimentConfig::from_json(&text)
            .unwrap_or_else(|e| panic!("{name} failed to parse: {e}"));
    }
}

#[test]
fn validation_errors_name_the_field() {
    let text = std::fs::read_to_string(repo_config("linear_run.json")).unwrap();
    let bad = text.replace("\"lambda\": 0.1", "\"lambda\": 1.5");
    let err = ExperimentConfig::from_json(&bad).unwrap_err();
    assert!(err.to_string().contains("chain.lambda"), "{err}");

    let bad = text.replace("\"theta0\": [0.0]", "\"theta0\": [0.0, 1.0]");
    let err = ExperimentConfig::from_json(&bad).unwrap_err();
    assert!(err.to_string().contains("theta0"), "{err}");

    // unknown fields are rejected with their JSON path
    let bad = text.replace("\"seed\": 42", "\"seed\": 42, \"extra\": 1");
    assert!(ExperimentConfig::from_json(&bad).is_err());
}

#[test]
fn run_writes_snapshots_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_output(&[
        "run",
        "--config",
        repo_config("linear_run.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let snapshots = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    let mut lines = snapshots.lines();
    assert_eq!(lines.next().unwrap(), "chain_id,t,theta_0");
    // 1000 chains x 4 checkpoints
    assert_eq!(lines.count(), 4000);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json_field(&summary, "/diverged_chains"), 0);
    // variance at t = 1000 sits at the stationary value 0.11/0.19 ≈ 0.5789
    let var = json_field(&summary, "/moments/3/variance/0")
        .as_f64()
        .unwrap();
    assert!((var - 0.5789473684210527).abs() < 0.08, "variance {var}");
}

#[test]
fn run_is_deterministic_for_a_fixed_seed() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run_to_output(&[
            "run",
            "--config",
            repo_config("linear_run.json").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = std::fs::read(dir_a.path().join("snapshots.csv")).unwrap();
    let b = std::fs::read(dir_b.path().join("snapshots.csv")).unwrap();
    assert_eq!(a, b);

    // a different seed changes the bytes
    let dir_c = tempfile::tempdir().unwrap();
    let out = run_to_output(&[
        "run",
        "--config",
        repo_config("linear_run.json").to_str().unwrap(),
        "--out",
        dir_c.path().to_str().unwrap(),
        "--seed",
        "43",
    ]);
    assert!(out.status.success());
    let c = std::fs::read(dir_c.path().join("snapshots.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn check_exit_codes_follow_the_contract() {
    // exact constants pass
    let out = run_to_output(&[
        "check",
        "--config",
        repo_config("linear_check.json").to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json_field(&report, "/passed"), true);
    let fitted_delta = json_field(&report, "/fitted/delta").as_f64().unwrap();
    assert!(
        (0.45..=0.5).contains(&fitted_delta),
        "fitted delta {fitted_delta}"
    );

    // delta above the supremum fails with a violation list
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(repo_config("linear_check.json")).unwrap();
    let bad = text.replace("\"delta\": 0.5", "\"delta\": 0.9");
    let path = dir.path().join("bad_check.json");
    std::fs::write(&path, bad).unwrap();
    let out = run_to_output(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json_field(&report, "/passed"), false);
    assert!(
        json_field(&report, "/reports/0/violation_count")
            .as_u64()
            .unwrap()
            > 0
    );

    // malformed config exits 2
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"version\": 99}").unwrap();
    let out = run_to_output(&["check", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // missing config file exits 2
    let out = run_to_output(&["check", "--config", "/nonexistent/nope.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn drift_demo_produces_certificate_with_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_output(&[
        "drift",
        "--config",
        repo_config("drift_demo.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cert: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("certificate.json")).unwrap(),
    )
    .unwrap();
    let gamma = json_field(&cert, "/gamma").as_f64().unwrap();
    assert!((gamma - 0.93).abs() < 1e-15);
    assert_eq!(json_field(&cert, "/verification/passed"), true);
    assert_eq!(
        json_field(&cert, "/verification/points_checked")
            .as_u64()
            .unwrap(),
        77
    );
    assert!(dir.path().join("drift_points.csv").exists());
}

#[test]
fn drift_rejects_step_size_above_threshold_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(repo_config("drift_demo.json")).unwrap();
    // threshold is 2Δ/(3K₁²) = 1/3; λ = 0.4 exceeds it
    let bad = text.replace("\"lambda\": 0.1", "\"lambda\": 0.4");
    let path = dir.path().join("too_big.json");
    std::fs::write(&path, bad).unwrap();
    let out = run_to_output(&[
        "drift",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("0.333333333333333"), "stderr: {stderr}");
}

#[test]
fn minorize_demo_reports_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_output(&[
        "minorize",
        "--config",
        repo_config("minorize_demo.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cert: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("certificate.json")).unwrap(),
    )
    .unwrap();
    let alpha = json_field(&cert, "/alpha").as_f64().unwrap();
    let expected = 5.9468780589371916e-6;
    assert!((alpha - expected).abs() / expected < 1e-6, "alpha {alpha}");
    assert_eq!(
        json_field(&cert, "/verification/failures")
            .as_u64()
            .unwrap(),
        0
    );
    assert!(dir.path().join("minorize_points.csv").exists());
}

#[test]
fn tamed_mlp_demo_runs_without_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_output(&[
        "run",
        "--config",
        repo_config("mlp_tamed.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json_field(&summary, "/diverged_chains").as_u64().unwrap(), 0);
    assert_eq!(json_field(&summary, "/d").as_u64().unwrap(), 112);
    // |θ₀| = 50 settles to a small stationary band under taming
    let start = json_field(&summary, "/moments/0/mean_norm_sq").as_f64().unwrap();
    let end = json_field(&summary, "/moments/3/mean_norm_sq").as_f64().unwrap();
    assert!((start - 2500.0).abs() < 1.0, "start mean |θ|² = {start}");
    assert!(end < 100.0, "final mean |θ|² = {end}");
}

#[test]
fn bounded_and_constant_streams_build_from_config() {
    let config = r#"{
        "version": 1,
        "seed": 3,
        "model": { "kind": "linear", "d": 2 },
        "stream": { "kind": "bounded", "inner": { "kind": "ar1", "m": 2, "rho": 0.8 }, "bound": 1.5 },
        "noise": { "kind": "laplace", "d": 2, "scale": 0.5 },
        "chain": {
            "lambda": 0.2,
            "horizon": 10,
            "theta0": [0.0, 0.0],
            "checkpoints": [10],
            "n_chains": 2
        }
    }"#;
    let parsed = ExperimentConfig::from_json(config).unwrap();
    assert_eq!(parsed.build_stream().unwrap().dim(), 2);

    let constant = config.replace(
        r#"{ "kind": "bounded", "inner": { "kind": "ar1", "m": 2, "rho": 0.8 }, "bound": 1.5 }"#,
        r#"{ "kind": "constant", "value": [1.0, -1.0] }"#,
    );
    assert!(ExperimentConfig::from_json(&constant).is_ok());

    // nested validation failures surface too
    let bad = config.replace("\"rho\": 0.8", "\"rho\": 1.8");
    assert!(ExperimentConfig::from_json(&bad).is_err());
}

#[test]
fn zero_horizon_run_emits_one_row_per_chain() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "version": 1,
        "seed": 7,
        "model": { "kind": "linear", "d": 2 },
        "stream": { "kind": "iid_gaussian", "m": 2 },
        "noise": { "kind": "gaussian", "d": 2 },
        "chain": {
            "lambda": 0.5,
            "horizon": 0,
            "theta0": [1.0, -1.0],
            "checkpoints": [0],
            "n_chains": 5
        }
    }"#;
    let path = dir.path().join("zero.json");
    std::fs::write(&path, config).unwrap();
    let out = run_to_output(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let snapshots = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    let rows: Vec<&str> = snapshots.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for (i, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("{i},0,")));
    }
}

#[test]
fn all_diverged_run_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // untamed MLP from far out: every chain explodes within a few steps
    let config = r#"{
        "version": 1,
        "seed": 7,
        "model": { "kind": "untamed_mlp", "dims": [2, 3, 1], "eta": 1.0 },
        "stream": { "kind": "iid_gaussian", "m": 3 },
        "noise": { "kind": "gaussian", "d": 9 },
        "chain": {
            "lambda": 0.01,
            "horizon": 100,
            "theta0": { "value": 20.0, "dim": 9 },
            "checkpoints": [0, 100],
            "n_chains": 4
        }
    }"#;
    let path = dir.path().join("boom.json");
    std::fs::write(&path, config).unwrap();
    let out = run_to_output(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    // outputs are still written for inspection
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(
        json_field(&summary, "/diverged_chains").as_u64().unwrap(),
        4
    );
}

#[test]
fn tv_demo_converges_below_its_threshold() {
    // the shipped two-start experiment: TV at the final checkpoint must fall
    // below the configured 0.05, so the command exits 0
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_output(&[
        "tv",
        "--config",
        repo_config("linear_tv.json").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let final_tv = json_field(&summary, "/final_tv").as_f64().unwrap();
    assert!(final_tv < 0.05, "final tv {final_tv}");
    // the experiment starts from disjoint point masses
    let initial_tv = json_field(&summary, "/series/0/tv").as_f64().unwrap();
    assert!((initial_tv - 1.0).abs() < 0.01);
}

#[test]
fn tv_threshold_gates_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "version": 1,
        "seed": 11,
        "model": { "kind": "linear", "d": 1 },
        "stream": { "kind": "iid_gaussian", "m": 1 },
        "noise": { "kind": "gaussian", "d": 1 },
        "chain": {
            "lambda": 0.1,
            "horizon": 200,
            "theta0": [0.0],
            "checkpoints": [0, 200],
            "n_chains": 2000
        },
        "tv": { "theta0_b": [10.0], "bins": 50, "pass_threshold": PASS }
    }"#;
    // generous threshold passes
    let path = dir.path().join("tv_ok.json");
    std::fs::write(&path, config.replace("PASS", "0.2")).unwrap();
    let out = run_to_output(&[
        "tv",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let series = std::fs::read_to_string(dir.path().join("tv_series.csv")).unwrap();
    assert!(series.starts_with("t,tv,std_error,noise_floor,n_a,n_b"));

    // an impossible threshold fails with exit 1
    let path = dir.path().join("tv_strict.json");
    std::fs::write(&path, config.replace("PASS", "0.0001")).unwrap();
    let out = run_to_output(&[
        "tv",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

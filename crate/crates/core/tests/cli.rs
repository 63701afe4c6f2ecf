use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn sstap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sstap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(path: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--config",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    sstap(&args)
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn simulate_first_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&config("example1_simulate.json"), dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert_eq!(r["schema"], "sstap.report.v1");
    assert_eq!(r["result"]["reward"], 3);
    assert_eq!(r["result"]["records"].as_array().unwrap().len(), 4);
    assert_eq!(r["config"]["seed"], 1);
    let csv = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(
        csv,
        "job_id,value,outcome,worker_id,f_value\n\
         1,0.0975,rejected,,\n\
         2,0.275,assigned,3,0.165\n\
         3,0.9575,assigned,1,0.383\n\
         4,0.4854,assigned,2,0.2427\n"
    );
}

#[test]
fn check_order_reports_the_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&config("example2_check_order.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let order = &report(dir.path())["result"]["order"];
    assert_eq!(order["verdict"], "violation");
    assert_eq!(order["first_job"]["id"], 1);
    assert_eq!(order["second_job"]["id"], 2);
    assert_eq!(order["worker_u"], 2);
    assert_eq!(order["worker_v"], 3);
}

#[test]
fn non_order_preserving_simulation_needs_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let table = fs::read_to_string(config("example2_forced.json"))
        .unwrap()
        .replace(
            "\"force_non_order_preserving\": true",
            "\"force_non_order_preserving\": false",
        );
    let path = dir.path().join("unforced.json");
    fs::write(&path, table).unwrap();
    let refused = run_config(&path, &dir.path().join("a"), &[]);
    assert_eq!(refused.status.code(), Some(3));
    let forced = run_config(
        &path,
        &dir.path().join("b"),
        &["--force-non-order-preserving"],
    );
    assert!(forced.status.success());
    let r = report(&dir.path().join("b"));
    assert_eq!(r["result"]["reward"], 2);
    assert_eq!(r["result"]["offline_optimum"], 3);
    assert!(r["result"]["heuristic"].is_object());
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("example1_simulate.json")).unwrap();
    for (name, broken) in [
        ("no_alpha", text.replace("\"alpha\": 0.15,", "")),
        ("bad_rate", text.replace("0.7]", "1.7]")),
        ("not_json", "{".to_owned()),
        ("bad_schema", text.replace("config.v1", "config.v9")),
    ] {
        let path = dir.path().join(format!("{name}.json"));
        fs::write(&path, broken).unwrap();
        let out = run_config(&path, &dir.path().join(name), &[]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains('`'), "{name}: {stderr}");
    }
    let missing = run_config(&dir.path().join("absent.json"), dir.path(), &[]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn missing_alpha_names_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("example1_simulate.json"))
        .unwrap()
        .replace("\"alpha\": 0.15,", "");
    let path = dir.path().join("c.json");
    fs::write(&path, text).unwrap();
    let out = run_config(&path, dir.path(), &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("`alpha`"));
}

#[test]
fn infeasible_extremes_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("load_bounds.json"))
        .unwrap()
        .replace("\"alpha\": 0.15", "\"alpha\": 0.5");
    let path = dir.path().join("c.json");
    fs::write(&path, text).unwrap();
    assert_eq!(run_config(&path, dir.path(), &[]).status.code(), Some(3));
}

#[test]
fn seed_and_trials_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.json");
    fs::write(
        &small,
        r#"{"schema": "sstap.config.v1", "mode": "figure1", "figure1": {"n": 20, "alpha_stop": 2.0}}"#,
    )
    .unwrap();
    let run = |seed: &str, sub: &str| {
        let out = run_config(
            &small,
            &dir.path().join(sub),
            &["--seed", seed, "--trials", "7"],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        fs::read_to_string(dir.path().join(sub).join("figure1.csv")).unwrap()
    };
    let a = run("3", "a");
    assert_eq!(a, run("3", "b"));
    assert_ne!(a, run("4", "c"));
    assert_eq!(a.lines().next(), Some("alpha,mean_passed,std_dev"));
    assert_eq!(a.lines().count(), 21);
    let r = report(&dir.path().join("a"));
    assert_eq!(r["seed"], 3);
    assert_eq!(r["config"]["figure1"]["trials"], 7);
    assert_eq!(r["result"]["job_domain"][0], 1e-6);
}

#[test]
fn mode_override_switches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(
        &config("example1_simulate.json"),
        dir.path(),
        &["--mode", "analyze-load"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report(dir.path());
    assert_eq!(r["mode"], "analyze-load");
    // One of the four jobs cannot be served, so the bounds say nothing.
    assert_eq!(r["result"]["load"]["verdict"], "vacuous");
}

#[test]
fn dsstap_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&config("dsstap_iid.json"), &dir.path().join("iid"), &[]);
    assert!(out.status.success());
    let r = report(&dir.path().join("iid"));
    let v = r["result"]["expected_reward"]["value"].as_f64().unwrap();
    assert!((v - 2.8607).abs() < 1e-4);

    let out = run_config(&config("dsstap_matching.json"), &dir.path().join("m"), &[]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("m").join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("i,j,w,std_error"));
    assert_eq!(csv.lines().count(), 10);
    let r = report(&dir.path().join("m"));
    assert_eq!(r["result"]["matrix"]["provenance"]["kind"], "monte_carlo");
    assert_eq!(
        r["result"]["assignment"]["permutation"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
}

#[test]
fn multilevel_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(&config("multilevel.json"), dir.path(), &[]);
    assert!(out.status.success());
    let r = report(dir.path());
    assert_eq!(r["result"]["rewards"], serde_json::json!([1, 0]));
    assert_eq!(r["result"]["flat_comparison"]["flat"], 2);
    assert!(dir.path().join("records_level1.csv").exists());
    assert!(dir.path().join("records_level2.csv").exists());
}

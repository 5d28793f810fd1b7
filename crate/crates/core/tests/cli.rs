//! Drives the `vucb` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use vucb::harness::output::SummaryDocument;
use vucb::harness::ExperimentConfig;

fn vucb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vucb"))
        .args(args)
        .env_remove("VUCB_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CONFIG: &str = r#"{
  "schema_version": 1,
  "instance": [
    {"family": "gaussian", "mean": 0.0, "sd": 1.0},
    {"family": "gaussian", "mean": 5.0, "sd": 3.0}
  ],
  "p": "inf",
  "horizons": [100, 1000],
  "policies": ["vucb", "uniform", "oracle"],
  "runs": 20,
  "seed": 42
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("experiment.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sample_size_reports_both_solutions() {
    let o = vucb(&["sample-size", "--eps", "0.1", "--groups", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("closed-form T: 29480"), "{text}");
    assert!(text.contains("bisection T:"));
}

#[test]
fn gaussian_bound_value() {
    let o = vucb(&["theory", "bound", "--family", "gaussian", "--sigma", "1,2,3", "--T", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0.059603"));
}

#[test]
fn fixed_point_prints_trace_summary() {
    let o = vucb(&["theory", "fixed-point", "--family", "gaussian", "--sigma", "1,2,3", "--T", "1000000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("converged: true"));
    assert!(text.contains("f_inf / (w1 + G/T): 0.98"), "{text}");
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(vucb(&["bogus"]).status.code(), Some(2));
    assert_eq!(vucb(&["--help"]).status.code(), Some(0));
    let o = vucb(&["theory", "bound", "--family", "sub-gaussian", "--sigma", "1,2", "--T", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c_hat"));

    let dir = tempfile::tempdir().unwrap();
    let mixed = CONFIG.replace(
        r#"{"family": "gaussian", "mean": 5.0, "sd": 3.0}"#,
        r#"{"family": "exponential", "rate": 0.5}"#,
    );
    let cfg = write_config(dir.path(), &mixed);
    let o = vucb(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("c_hat"));
    assert!(!dir.path().join("episodes.csv").exists());

    let missing = dir.path().join("nope.json");
    assert_eq!(vucb(&["simulate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let run = |out: &Path, workers: &str| {
        let o = vucb(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let first = run(&a, "1");
    run(&b, "3");
    assert!(stdout(&first).contains("wrote"));
    let csv_bytes = |d: &Path| std::fs::read(d.join("episodes.csv")).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    // The echoed config records each run's own output directory.
    let summary = |d: &Path| -> SummaryDocument {
        serde_json::from_str(&std::fs::read_to_string(d.join("summary.json")).unwrap()).unwrap()
    };
    let (sa, sb) = (summary(&a), summary(&b));
    assert_eq!(sa.summaries, sb.summaries);
    assert_eq!(sa.config.out_dir.as_deref(), Some(a.as_path()));

    let csv = std::fs::read_to_string(a.join("episodes.csv")).unwrap();
    // Header plus 3 policies x 2 horizons x 20 runs.
    assert_eq!(csv.lines().count(), 1 + 120);

    let original = ExperimentConfig::from_json(CONFIG).unwrap();
    assert_eq!(sa.config.instance, original.instance);
    assert_eq!(sa.config.seed, 42);
    let echoed = ExperimentConfig::from_json(&serde_json::to_string(&sa.config).unwrap()).unwrap();
    assert!(echoed.validate().is_ok());
    assert_eq!(sa.summaries.len(), 6);
    let oracle = sa.summaries.iter().find(|s| s.policy.to_string() == "oracle").unwrap();
    assert_eq!(oracle.mean_regret, 0.0);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, seed) in [(&a, "1"), (&b, "2")] {
        let o = vucb(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed, "--runs", "5"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &Path| std::fs::read_to_string(d.join("episodes.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    assert_eq!(read(&a).lines().count(), 1 + 30);
}

#[test]
fn shipped_config_is_valid() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/three_gaussians.json");
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.validate().unwrap().sigmas(), [1.0, 2.0, 3.0]);
}

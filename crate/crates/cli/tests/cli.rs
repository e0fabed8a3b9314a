use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn atest() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atest"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).expect("write config");
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const SAFE_1D: &str = r#"
spec = "mu1"

[environment]
kind = "sincos"

[domain]
lower = [0.0]
upper = [10.0]

[[predicates]]
name = "mu1"
[predicates.functional]
kind = "terminal"
expr = { channel = "sin", scale = 0.5, offset = 1.55 }

[run]
budget = 10
seed = 5
method = "multi-gp"
beta = { mode = "fixed", beta_sqrt = 2.0 }
"#;

#[test]
fn falsify_finds_the_trig_counterexample_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = atest()
        .args(["falsify", "--config"])
        .arg(repo_config("sincos.toml"))
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("counterexample"));
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert!(parsed["worst_phi"].as_f64().unwrap() <= 0.0);
    assert_eq!(parsed["schema_version"], 1);
}

#[test]
fn falsify_on_a_safe_spec_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SAFE_1D);
    let report = dir.path().join("report.json");
    let out = atest()
        .args(["falsify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("no counterexample"));
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert!(parsed["worst_phi"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_predicate_binding_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SAFE_1D.replace("spec = \"mu1\"", "spec = \"mu9\""));
    let out = atest()
        .args(["falsify", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mu9"), "stderr: {}", stderr(&out));
}

#[test]
fn out_of_range_delta_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SAFE_1D);
    let out = atest()
        .args(["verify", "--delta", "1.5", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("delta"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_config_key_exits_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SAFE_1D.replace("budget = 10", "budgett = 10"));
    let out = atest()
        .args(["falsify", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budgett"), "stderr: {}", stderr(&out));
}

#[test]
fn print_tree_shows_the_signed_leaves_and_skips_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = atest()
        .args(["falsify", "--print-tree", "--config"])
        .arg(repo_config("sincos.toml"))
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("predicates: mu1 mu2"), "stdout: {text}");
    assert!(text.contains("max"), "stdout: {text}");
    assert!(text.contains("leaf -mu1"), "stdout: {text}");
    assert!(!report.exists(), "print-tree must not run the engine");
}

#[test]
fn verify_reports_verified_on_a_safe_toy() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = atest()
        .args(["verify", "--config"])
        .arg(repo_config("verify/shifted-sine.toml"))
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("verified"));
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(parsed["certificate"]["verified"], true);
}

#[test]
fn verify_with_an_exhausted_budget_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // Needle-thin lengthscales: a handful of samples cannot pull the
    // posterior below prior uncertainty anywhere else, so the bound
    // never clears zero and the budget runs out undecided.
    let config = write_config(
        dir.path(),
        &format!("{SAFE_1D}\n[run.gp]\nlengthscales = [0.05]\n"),
    );
    let out = atest()
        .args(["verify", "--budget", "3", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("report.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("inconclusive"), "stdout: {}", stdout(&out));
}

#[test]
fn verify_finding_a_counterexample_is_conclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = atest()
        .args(["verify", "--config"])
        .arg(repo_config("sincos.toml"))
        .arg("--out")
        .arg(dir.path().join("report.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("falsified"), "stdout: {}", stdout(&out));
}

#[test]
fn bench_writes_one_report_per_run_plus_the_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bench");
    let out = atest()
        .args(["bench", "--repeats", "2", "--budget", "5", "--config"])
        .arg(repo_config("sincos.toml"))
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let mut files: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    files.sort();
    assert_eq!(
        files,
        vec![
            "aggregate.json",
            "multi-gp-seed1.json",
            "multi-gp-seed2.json",
            "single-gp-seed1.json",
            "single-gp-seed2.json",
        ]
    );
}

#[test]
fn bench_with_one_repeat_reports_zero_spread() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bench");
    let out = atest()
        .args([
            "bench",
            "--repeats",
            "1",
            "--budget",
            "5",
            "--methods",
            "random",
            "--config",
        ])
        .arg(repo_config("sincos.toml"))
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let agg: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("aggregate.json")).unwrap()).unwrap();
    let a = &agg["aggregates"][0];
    assert_eq!(a["runs"], 1);
    assert_eq!(a["counterexamples_stddev"].as_f64().unwrap(), 0.0);
    assert_eq!(a["worst_phi_stddev"].as_f64().unwrap(), 0.0);
}

#[test]
fn identical_invocations_write_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&a, &b] {
        let out = atest()
            .args(["falsify", "--config"])
            .arg(repo_config("sincos.toml"))
            .arg("--out")
            .arg(path)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

fn echo_config(mode: &str, extra: &str) -> String {
    format!(
        r#"
spec = "m"

[environment]
kind = "external"
command = ["{sim}", "--mode", "{mode}", "--dim", "2", "--predicates", "m"]

[domain]
lower = [0.0, 0.0]
upper = [2.0, 2.0]
{extra}
[run]
budget = 6
seed = 2
method = "multi-gp"
beta = {{ mode = "fixed", beta_sqrt = 3.0 }}
"#,
        sim = env!("CARGO_BIN_EXE_atest-echo-sim"),
    )
}

#[test]
fn external_mu_mode_round_trips_predicate_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &echo_config("mu", ""));
    let report = dir.path().join("report.json");
    let out = atest()
        .args(["falsify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let w = parsed["worst_w"].as_array().unwrap();
    let mean = (w[0].as_f64().unwrap() + w[1].as_f64().unwrap()) / 2.0;
    let phi = parsed["worst_phi"].as_f64().unwrap();
    assert!((phi - (0.5 - mean)).abs() < 1e-12, "phi {phi} vs mean {mean}");
}

#[test]
fn external_trajectory_mode_feeds_the_bound_functionals() {
    let bindings = r#"
[[predicates]]
name = "m"
[predicates.functional]
kind = "terminal"
expr = { channel = "mean", scale = -1.0, offset = 0.5 }
"#;
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &echo_config("trajectory", bindings));
    let report = dir.path().join("report.json");
    let out = atest()
        .args(["falsify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&report)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let parsed: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    let w = parsed["worst_w"].as_array().unwrap();
    let mean = (w[0].as_f64().unwrap() + w[1].as_f64().unwrap()) / 2.0;
    let phi = parsed["worst_phi"].as_f64().unwrap();
    assert!((phi - (0.5 - mean)).abs() < 1e-12, "phi {phi} vs mean {mean}");
    assert!(parsed["worst_trajectory"]["channels"]["mean"].is_array());
}

#[test]
fn a_child_that_exits_immediately_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let body = echo_config("mu", "").replace(
        &format!("\"{}\"", env!("CARGO_BIN_EXE_atest-echo-sim")),
        "\"/bin/false\"",
    );
    let config = write_config(dir.path(), &body.replace(", \"--mode\", \"mu\", \"--dim\", \"2\", \"--predicates\", \"m\"", ""));
    let out = atest()
        .args(["falsify", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stdout: {}", stdout(&out));
}

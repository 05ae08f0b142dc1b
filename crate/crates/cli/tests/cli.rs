use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn phasebeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasebeam"))
        .args(args)
        .output()
        .expect("binary runs")
}

const TINY: &str = r#"
seed = 3
phases = 2

[geometry]
N = 2

[target]
theta_deg = 15.0
phi_deg = 60.0

[evaluation.grid]
theta_steps = 19
phi_steps = 37
"#;

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn solve_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", TINY);
    let out_dir = dir.path().join("out");
    let out = phasebeam(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    let run_dir = Path::new(summary["output"].as_str().unwrap());
    assert!(run_dir.starts_with(&out_dir));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "phasebeam-report/1");
    assert_eq!(report["config"]["seed"], 3);
    assert_eq!(report["sa"]["seed"], 3);
    assert!(run_dir.join("plots/pattern_quantized.svg").exists());
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", TINY);
    let out_dir = dir.path().join("out");
    let out = phasebeam(&[
        "solve", "--config", &cfg, "--seed", "11", "--phases", "4", "--early-stop", "off", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = stdout_json(&out)["output"].as_str().unwrap().to_string();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(Path::new(&run_dir).join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 11);
    assert_eq!(report["config"]["phases"], 4);
    assert_eq!(report["variables"], 8);
    assert_eq!(report["sa"]["early_stop"], "off");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", &format!("{TINY}\nunknown_key = 1\n"));
    let out = phasebeam(&["solve", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown"));

    let missing = phasebeam(&["solve", "--config", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let cfg = write_config(dir.path(), "run.toml", TINY);
    let out = phasebeam(&["solve", "--config", &cfg, "--phases", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = phasebeam(&["solve", "--config", &cfg, "--early-stop", "c2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_3() {
    // elements this close together make B singular; the fallback is off
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "singular.toml",
        "phases = 2\n[geometry]\nN = 2\nspacing_over_lambda = 1e-12\n[solver]\nb_regularization = 0.0\n[target]\ntheta_deg = 0.0\nphi_deg = 0.0\n",
    );
    let out = phasebeam(&["solve", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `continuous`"));
    assert!(!dir.path().join("o").exists() || fs::read_dir(dir.path().join("o")).unwrap().count() == 0);
}

#[test]
fn oracle_agrees_with_bisection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", TINY);
    let out = phasebeam(&["oracle", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["configurations"], 16);
    assert_eq!(v["agree"], true);
    let ratio = v["max_ratio"].as_f64().unwrap();
    assert!(ratio > 0.0 && ratio <= 1.0);
}

#[test]
fn export_qubo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.toml", TINY);
    let out_dir = dir.path().join("q");
    let out = phasebeam(&["export-qubo", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--t", "0.25", "--t", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let paths: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(paths.len(), 2);
    let text = fs::read_to_string(&paths[0]).unwrap();
    let q = phasebeam_core::qubo::QuboInstance::read_triplets(text.as_bytes()).unwrap();
    assert_eq!(q.num_vars(), 4);
    assert_eq!(q.t(), Some(0.25));

    let bad = phasebeam(&["export-qubo", "--config", &cfg, "--t", "1.5"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sweep_element_count_and_mixed_modes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |n: usize| {
        format!(
            "[[runs]]\nphases = 2\n[runs.geometry]\nN = {n}\n[runs.target]\ntheta_deg = 10.0\nphi_deg = 20.0\n[runs.solver]\nbackend = \"exhaustive\"\n[runs.evaluation.grid]\ntheta_steps = 19\nphi_steps = 37\n"
        )
    };
    let a = write_config(dir.path(), "a.toml", &format!("mode = \"element-count\"\n{}{}", run(2), run(3)));
    let out_dir = dir.path().join("s");
    let out = phasebeam(&["sweep", "--config", &a, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("sweep_element-count.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let b = write_config(dir.path(), "b.toml", &format!("mode = \"timing\"\n{}", run(2)));
    let mixed = phasebeam(&["sweep", "--config", &a, "--config", &b]);
    assert_eq!(mixed.status.code(), Some(2));
}

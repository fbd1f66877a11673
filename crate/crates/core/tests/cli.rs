use std::path::PathBuf;
use std::process::{Command, Output};

const LIGHT: &str = "\
# small budgets for command-line tests
model = nuisance-coupled
max_rounds = 1
bonus_samples = 2
design.iterations = 2
design.samples = 32
estimation.samples = 64
estimation.rollouts = 1
eval_sequences = 2
";

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn qoed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qoed"))
        .args(args)
        .env("QOED_THREADS", "1")
        .output()
        .unwrap()
}

fn light_config(dir: &PathBuf) -> String {
    let p = dir.join("light.cfg");
    std::fs::write(&p, LIGHT).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bench_csv_is_reproducible() {
    let dir = scratch("cli-bench");
    let cfg = light_config(&dir);
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.join(run);
        let o = qoed(&["bench", "--config", &cfg, "--seed", "3", "--seeds", "2", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(std::fs::read_to_string(out.join("bench.csv")).unwrap());
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("bench.json")).unwrap()).unwrap();
        assert_eq!(json["reports"].as_array().unwrap().len(), 6);
    }
    assert_eq!(csvs[0], csvs[1]);
    let mut lines = csvs[0].lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,seed,round,param_rmse_x100,dyn_rmse_x100,bonus,eta,beta,rho"
    );
    assert_eq!(lines.count(), 6);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = scratch("cli-config");
    let bad = dir.join("bad.cfg");
    std::fs::write(&bad, "max_rounds = many\n").unwrap();
    assert_eq!(qoed(&["bench", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    assert_eq!(qoed(&["bench", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qoed(&["bench", "--config", "/nonexistent/qoed.cfg"]).status.code(), Some(2));
    assert_eq!(qoed(&["bench", "--method", "bogus"]).status.code(), Some(2));
    assert_eq!(qoed(&["sweep", "--delta-cos", "-1"]).status.code(), Some(2));
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let dir = scratch("cli-threads");
    let cfg = light_config(&dir);
    let o = Command::new(env!("CARGO_BIN_EXE_qoed"))
        .args(["bench", "--config", &cfg, "--seeds", "1", "--method", "boed"])
        .env("QOED_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let dir = scratch("cli-verify");
    let report = dir.join("verify.json");
    let o = qoed(&["verify", "--seed", "1", "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(json["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn bonus_from_score_file() {
    let dir = scratch("cli-bonus");
    let scores = dir.join("scores.txt");
    std::fs::write(&scores, "1.0, 0.1, 0.0, 0.0\n-0.8 0.2 0.1 0.0\n0.9,-0.1,0.0,0.05\n").unwrap();
    let o = qoed(&["bonus", "--method", "boed", "--input", scores.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let expected = (1.0 + 0.01 + 0.64 + 0.04 + 0.01 + 0.81 + 0.01 + 0.0025) / 3.0;
    assert!((json["bonus"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert_eq!(json["samples"], 3);
}

#[test]
fn bonus_from_trajectory_file() {
    let dir = scratch("cli-bonus-traj");
    let traj = dir.join("traj.json");
    std::fs::write(
        &traj,
        r#"{"states": [[0,0,0,0], [0.12,-0.05,0.1,-0.1], [0.2,-0.1,0.19,-0.19]],
            "actions": [[1,-1], [1,-1]]}"#,
    )
    .unwrap();
    let o = qoed(&["bonus", "--input", traj.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["samples"], 2);
    assert_eq!(json["kind"], "qoed");

    std::fs::write(&traj, r#"{"states": [[0,0,0,0]], "actions": [[1,-1]]}"#).unwrap();
    assert_ne!(qoed(&["bonus", "--input", traj.to_str().unwrap()]).status.code(), Some(0));
}

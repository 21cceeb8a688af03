use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn otmpc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otmpc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_cost_two_by_two_is_uniform() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("in.json"), r#"{"cost": [[0, 0], [0, 0]]}"#).unwrap();
    let o = otmpc(dir.path(), &["transport", "in.json", "--epsilon", "0.1", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = read_json(&dir.path().join("out/coupling.json"));
    for row in v["coupling"].as_array().unwrap() {
        for x in row.as_array().unwrap() {
            assert!((x.as_f64().unwrap() - 0.25).abs() < 1e-12);
        }
    }
    assert_eq!(v["converged"], Value::Bool(true));
    // 0.1 · Σ P (ln P − 1) with P = ¼ everywhere
    assert!((v["objective"].as_f64().unwrap() - 0.1 * ((0.25f64).ln() - 1.0)).abs() < 1e-12);
}

#[test]
fn iteration_cap_exits_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("in.json"),
        r#"{"cost": [[0, 5], [3, 0]], "q": [0.9, 0.1], "p": [0.2, 0.8]}"#,
    )
    .unwrap();
    let o = otmpc(
        dir.path(),
        &["transport", "in.json", "--epsilon", "0.01", "--max-iterations", "1", "--out", "."],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let v = read_json(&dir.path().join("coupling.json"));
    assert_eq!(v["converged"], Value::Bool(false));
    assert_eq!(v["iterations"].as_u64(), Some(1));
}

#[test]
fn coupling_round_trips_through_json() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("in.json"),
        r#"{"cost": [[0.0, 1.0, 4.0], [1.0, 0.0, 1.0]], "q": [0.3, 0.7], "p": [0.5, 0.25, 0.25]}"#,
    )
    .unwrap();
    let o = otmpc(dir.path(), &["transport", "in.json", "--epsilon", "0.5", "--tol", "1e-12"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = read_json(&dir.path().join("coupling.json"));
    let plan: Vec<Vec<f64>> = serde_json::from_value(v["coupling"].clone()).unwrap();
    let q = [0.3, 0.7];
    let p = [0.5, 0.25, 0.25];
    for (i, row) in plan.iter().enumerate() {
        assert!((row.iter().sum::<f64>() - q[i]).abs() < 1e-10);
    }
    for (j, pj) in p.iter().enumerate() {
        assert!((plan.iter().map(|r| r[j]).sum::<f64>() - pj).abs() < 1e-10);
    }
    let text = serde_json::to_string(&v).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap(), v);
}

#[test]
fn malformed_transport_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("in.json"), r#"{"cost": [[0, 1], [1]]}"#).unwrap();
    let o = otmpc(dir.path(), &["transport", "in.json"]);
    assert_eq!(code(&o), 1);
    fs::write(dir.path().join("neg.json"), r#"{"cost": [[0, 1], [1, 0]], "q": [1.5, -0.5]}"#).unwrap();
    let o = otmpc(dir.path(), &["transport", "neg.json"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = otmpc(dir.path(), &["bench", "--config", "does_not_exist.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("does_not_exist.toml"), "{}", stderr(&o));
}

#[test]
fn unknown_key_lists_valid_keys() {
    let dir = tempfile::tempdir().unwrap();
    let o = otmpc(dir.path(), &["bench", "--set", "controller.betta=1"]);
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains("controller.betta"));
    assert!(e.contains("controller.beta,"));
}

#[test]
fn bad_flag_exits_one_and_help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&otmpc(dir.path(), &["bench", "--no-such-flag"])), 1);
    assert_eq!(code(&otmpc(dir.path(), &["--version"])), 0);
}

#[test]
fn help_lists_every_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = otmpc(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for k in otmpc::bench::SCHEMA {
        assert!(text.contains(k.key), "help is missing {}", k.key);
    }
}

const TINY: [&str; 10] = [
    "--set",
    "environment.max_obstacles=4",
    "--set",
    "controller.horizon=20",
    "--set",
    "controller.num_samples=40",
    "--set",
    "controller.iterations=2",
    "--set",
    "harness.step_cap=30",
];

fn bench_hash(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["bench", "--set", "harness.num_trials=1", "--out", "h"];
    args.extend_from_slice(&TINY);
    args.extend_from_slice(extra);
    let o = otmpc(dir, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    read_json(&dir.join("h/summary.json"))["config_hash"]
        .as_str()
        .unwrap()
        .to_string()
}

#[test]
fn beta_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = bench_hash(dir.path(), &[]);
    let b = bench_hash(dir.path(), &["--set", "controller.beta=0.5"]);
    let a2 = bench_hash(dir.path(), &[]);
    assert_ne!(a, b);
    assert_eq!(a, a2);
    assert_eq!(a.len(), 64);
}

#[test]
fn bench_smoke_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["bench", "--set", "harness.num_trials=5", "--set", "harness.dump_trajectories=true", "--out", "run"];
    args.extend_from_slice(&TINY);
    let o = otmpc(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let run = dir.path().join("run");
    for f in ["records.jsonl", "summary.json", "summary.txt", "config.toml", "trajectory_0004.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let lines: Vec<Value> = fs::read_to_string(run.join("records.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5);
    for (i, r) in lines.iter().enumerate() {
        assert_eq!(r["trial_index"].as_u64(), Some(i as u64));
    }
    let summary = read_json(&run.join("summary.json"));
    assert_eq!(summary["trials"].as_u64(), Some(5));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Success (%)"));

    // The written config reproduces the run.
    let o2 = otmpc(
        dir.path(),
        &["bench", "--config", "run/config.toml", "--out", "rerun", "--set", "harness.dump_trajectories=false"],
    );
    assert_eq!(code(&o2), 0, "{}", stderr(&o2));
    let again = read_json(&dir.path().join("rerun/summary.json"));
    for k in ["successes", "crashes", "timeouts", "avg_steps_mean"] {
        assert_eq!(summary[k], again[k], "{k}");
    }
}

#[test]
fn episode_writes_trajectory_and_streams_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["episode", "--index", "2", "--verbose", "--out", "ep"];
    args.extend_from_slice(&TINY);
    let o = otmpc(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = read_json(&dir.path().join("ep/trajectory.json"));
    let r = read_json(&dir.path().join("ep/record.json"));
    let steps = r["steps_taken"].as_u64().unwrap() as usize;
    assert_eq!(t["states"].as_array().unwrap().len(), steps + 1);
    assert_eq!(t["actions"].as_array().unwrap().len(), steps);
    let diag_lines = stderr(&o).lines().filter(|l| l.contains("\"diagnostics\"")).count();
    assert_eq!(diag_lines, steps);
}

#[test]
fn demo_is_deterministic_and_structured() {
    let dir = tempfile::tempdir().unwrap();
    let o1 = otmpc(dir.path(), &["demo-bimodal", "--out", "d1"]);
    let o2 = otmpc(dir.path(), &["demo-bimodal", "--out", "d2"]);
    assert_eq!(code(&o1), 0, "{}", stderr(&o1));
    assert_eq!(code(&o2), 0);
    for name in ["otmpc_trajectory.json", "mppi_trajectory.json"] {
        let a = read_json(&dir.path().join("d1").join(name));
        let b = read_json(&dir.path().join("d2").join(name));
        assert_eq!(a["states"], b["states"]);
        assert_eq!(a["actions"], b["actions"]);
        let cycles = a["cycles"].as_array().unwrap();
        assert_eq!(cycles.len(), a["actions"].as_array().unwrap().len());
        let c0 = &cycles[0];
        let n = c0["candidates"].as_array().unwrap().len();
        assert_eq!(c0["paths"].as_array().unwrap().len(), n);
        assert!(c0["best_index"].as_u64().unwrap() < n as u64);
        // 30-step plans, 31 states per path
        assert_eq!(c0["candidates"][0].as_array().unwrap().len(), 30);
        assert_eq!(c0["paths"][0].as_array().unwrap().len(), 31);
        let obstacles = a["field"]["obstacles"].as_array().unwrap();
        assert_eq!(obstacles.len(), 1);
    }
}

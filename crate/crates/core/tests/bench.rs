use otmpc::bench::{
    compare_controllers, compare_records, records_from_jsonl, records_to_jsonl, run_benchmark, run_trial, sign_test,
    summarize, trial_seed, write_outputs, BenchmarkConfig, ControllerKind, EnvironmentKind, TrialOutcome, TrialRecord,
    SCHEMA,
};
use otmpc::Error;

fn record(i: usize, outcome: TrialOutcome, steps: usize, dist: f64) -> TrialRecord {
    TrialRecord {
        trial_index: i,
        seed: trial_seed(0, i),
        outcome,
        steps_taken: steps,
        final_goal_distance: Some(dist),
        wall_time: 0.0,
        config_hash: "h".into(),
        error: None,
    }
}

fn tiny(kind: ControllerKind, trials: usize) -> BenchmarkConfig {
    let mut cfg = BenchmarkConfig::defaults(EnvironmentKind::Car, kind);
    cfg.environment.max_obstacles = 4;
    cfg.controller.horizon = 20;
    cfg.controller.num_samples = 40;
    cfg.controller.iterations = 2;
    cfg.harness.step_cap = 30;
    cfg.harness.num_trials = trials;
    cfg.harness.workers = 1;
    cfg.harness.record_wall_time = false;
    cfg
}

#[test]
fn summary_arithmetic() {
    let records: Vec<_> = (0..10).map(|i| record(i, TrialOutcome::Success, 50 + i, 0.1)).collect();
    let s = summarize(&records, "car-easy", "otmpc", "h");
    assert_eq!(s.success_percent, 100.0);
    assert_eq!(s.avg_steps_mean, Some(54.5));
    // Σ (k − 4.5)² for k = 0..9 is 82.5
    assert!((s.avg_steps_std.unwrap() - (82.5f64 / 9.0).sqrt()).abs() < 1e-12);
    assert!((s.avg_steps_std.unwrap() - 3.03).abs() < 5e-3);
    let text = s.to_text();
    assert!(text.contains("54.5 ± 3.0"), "{text}");
}

#[test]
fn zero_successes_print_a_dash() {
    let records = vec![
        record(0, TrialOutcome::Crash, 10, 3.0),
        record(1, TrialOutcome::Timeout, 200, 1.0),
        record(2, TrialOutcome::Crash, 7, 2.0),
    ];
    let s = summarize(&records, "car-hard", "mppi", "h");
    assert_eq!(s.success_percent, 0.0);
    assert_eq!(s.avg_steps_mean, None);
    assert_eq!(s.avg_steps_std, None);
    assert_eq!(s.median_final_goal_distance, Some(2.0));
    assert_eq!((s.crashes, s.timeouts), (2, 1));
    assert!(s.to_text().contains('—'));
}

#[test]
fn only_successes_count_toward_steps() {
    let records = vec![
        record(0, TrialOutcome::Success, 40, 0.2),
        record(1, TrialOutcome::Crash, 3, 4.0),
        record(2, TrialOutcome::Success, 60, 0.1),
        record(3, TrialOutcome::Timeout, 200, 0.9),
    ];
    let s = summarize(&records, "t", "c", "h");
    assert_eq!(s.avg_steps_mean, Some(50.0));
    assert_eq!(s.success_percent, 50.0);
    assert_eq!(s.median_final_goal_distance, Some(0.55));
    let mut reversed = records.clone();
    reversed.reverse();
    assert_eq!(summarize(&reversed, "t", "c", "h"), s);
}

fn binomial_oracle(a: usize, b: usize) -> f64 {
    // exact integer arithmetic for small n
    let n = a + b;
    let k = a.min(b);
    let mut choose = vec![1u128; n + 1];
    for i in 1..=n {
        choose[i] = choose[i - 1] * (n - i + 1) as u128 / i as u128;
    }
    let tail: u128 = choose[..=k].iter().sum();
    (2.0 * tail as f64 / 2f64.powi(n as i32)).min(1.0)
}

#[test]
fn sign_test_matches_exact_binomial() {
    for a in 0..40 {
        for b in 0..40 {
            let p = sign_test(a, b);
            let o = if a + b == 0 { 1.0 } else { binomial_oracle(a, b) };
            assert!((p - o).abs() < 1e-12 * o.max(1e-300) + 1e-15, "{a} {b}: {p} vs {o}");
        }
    }
    assert!(sign_test(500, 100) > 0.0);
}

#[test]
fn always_succeeds_against_always_fails() {
    let good: Vec<_> = (0..30).map(|i| record(i, TrialOutcome::Success, 20, 0.1)).collect();
    let bad: Vec<_> = (0..30).map(|i| record(i, TrialOutcome::Crash, 5, 3.0)).collect();
    let r = compare_records("good", &good, "bad", &bad).unwrap();
    assert_eq!(r.difference_percent, 100.0);
    assert_eq!((r.wins_a, r.wins_b, r.ties), (30, 0, 0));
    assert!(r.p_value < 1e-6);
    assert!(compare_records("good", &good, "bad", &bad[..29]).is_err());
}

#[test]
fn controller_against_itself_ties_everywhere() {
    let cfg = tiny(ControllerKind::Mppi, 4);
    let (report, a, b) = compare_controllers(&cfg, &cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(report.difference_percent, 0.0);
    assert_eq!(report.ties, 4);
    assert_eq!(report.p_value, 1.0);
    assert!(report.to_text().contains("mppi"));
}

#[test]
fn compare_rejects_unpaired_configs() {
    let a = tiny(ControllerKind::Mppi, 3);
    let mut b = tiny(ControllerKind::Otmpc, 4);
    assert!(matches!(compare_controllers(&a, &b), Err(Error::Config(_))));
    b.harness.num_trials = 3;
    b.environment.difficulty = otmpc::envs::Difficulty::Hard;
    assert!(matches!(compare_controllers(&a, &b), Err(Error::Config(_))));
}

#[test]
fn records_reaggregate_from_jsonl() {
    let cfg = tiny(ControllerKind::Otmpc, 6);
    let result = run_benchmark(&cfg).unwrap();
    let text = records_to_jsonl(&result.records);
    let back = records_from_jsonl(&text).unwrap();
    assert_eq!(back, result.records);
    let again = summarize(&back, &cfg.environment.task_name(), "otmpc", &cfg.config_hash());
    assert_eq!(again, result.summary);
    assert_eq!(records_to_jsonl(&back), text);
}

#[test]
fn trials_are_deterministic_and_serial_matches_parallel() {
    let mut cfg = tiny(ControllerKind::Otmpc, 6);
    let one = run_trial(&cfg, 3);
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&run_trial(&cfg, 3)).unwrap());
    let serial = run_benchmark(&cfg).unwrap();
    cfg.harness.workers = 3;
    let parallel = run_benchmark(&cfg).unwrap();
    assert_eq!(records_to_jsonl(&serial.records), records_to_jsonl(&parallel.records));
    assert_eq!(serial.records[3], one);
}

#[test]
fn step_cap_one_times_out() {
    let mut cfg = tiny(ControllerKind::Cem, 3);
    cfg.harness.step_cap = 1;
    for i in 0..3 {
        let r = run_trial(&cfg, i);
        assert_eq!(r.outcome, TrialOutcome::Timeout);
        assert_eq!(r.steps_taken, 1);
    }
}

#[test]
fn unobstructed_field_succeeds_for_every_controller() {
    for kind in [ControllerKind::Otmpc, ControllerKind::Mppi, ControllerKind::Cem] {
        let mut cfg = BenchmarkConfig::defaults(EnvironmentKind::Car, kind);
        cfg.environment.max_obstacles = 0;
        cfg.harness.record_wall_time = false;
        let r = run_trial(&cfg, 0);
        assert_eq!(r.outcome, TrialOutcome::Success, "{kind:?}: {r:?}");
        assert!(r.final_goal_distance.unwrap() < 0.3);
        assert!(r.steps_taken <= cfg.harness.step_cap);
    }
}

#[test]
fn generation_failure_is_a_recorded_outcome() {
    let mut cfg = tiny(ControllerKind::Mppi, 2);
    cfg.environment.min_obstacles = 5000;
    cfg.environment.max_obstacles = 5000;
    let result = run_benchmark(&cfg).unwrap();
    assert!(result.records.iter().all(|r| r.outcome == TrialOutcome::GenerationError));
    assert!(result.records[0].error.as_deref().unwrap().contains(&result.records[0].seed.to_string()) || result.records[0].error.is_some());
    assert_eq!(result.summary.generation_errors, 2);
}

#[test]
fn config_errors_list_every_violation() {
    let e = BenchmarkConfig::from_toml_str("[controller]\nbeta = -1.0\nhorizon = 0\n", &[]).unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("beta") && msg.contains("horizon"), "{msg}");
    let e = BenchmarkConfig::from_toml_str("[controller]\nbetta = 1.0\n", &[]).unwrap_err();
    assert!(e.to_string().contains("controller.betta"));
    let e = BenchmarkConfig::from_toml_str("", &["harness.num_trials=0".into()]).unwrap_err();
    assert!(e.to_string().contains("num_trials"));
    let e = BenchmarkConfig::load(Some(std::path::Path::new("/nonexistent/bench.toml")), &[]).unwrap_err();
    assert!(matches!(e, Error::Io { .. }));
    assert!(e.to_string().contains("/nonexistent/bench.toml"));
}

#[test]
fn hash_tracks_only_outcome_relevant_fields() {
    let a = tiny(ControllerKind::Otmpc, 5);
    let mut b = a.clone();
    b.harness.num_trials = 50;
    b.harness.workers = 7;
    b.harness.output_dir = "elsewhere".into();
    assert_eq!(a.config_hash(), b.config_hash());
    b.controller.beta = 0.5;
    assert_ne!(a.config_hash(), b.config_hash());
    let c = BenchmarkConfig::from_toml_str(&a.to_toml(), &[]).unwrap();
    assert_eq!(c, a);
    assert_eq!(c.config_hash(), a.config_hash());
}

#[test]
fn schema_covers_the_written_config() {
    let text = tiny(ControllerKind::Cem, 1).to_toml();
    let table: toml::Table = text.parse().unwrap();
    let mut keys = Vec::new();
    for (section, v) in &table {
        for k in v.as_table().unwrap().keys() {
            keys.push(format!("{section}.{k}"));
        }
    }
    for k in &keys {
        assert!(SCHEMA.iter().any(|d| d.key == k), "{k} undocumented");
    }
    assert_eq!(keys.len(), SCHEMA.len());
}

#[test]
fn outputs_are_written() {
    let dir = std::env::temp_dir().join(format!("otmpc-bench-test-{}", std::process::id()));
    let mut cfg = tiny(ControllerKind::Mppi, 2);
    cfg.harness.dump_trajectories = true;
    let result = run_benchmark(&cfg).unwrap();
    write_outputs(&dir, &cfg, &result).unwrap();
    for f in ["records.jsonl", "summary.json", "summary.txt", "config.toml", "trajectory_0000.json", "trajectory_0001.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let text = std::fs::read_to_string(dir.join("records.jsonl")).unwrap();
    assert_eq!(records_from_jsonl(&text).unwrap(), result.records);
    std::fs::remove_dir_all(&dir).unwrap();
}

//! Seeded Monte Carlo benchmarks.
//!
//! Each trial derives its own seed from `(base_seed, trial_index)`, so
//! results do not depend on how trials are scheduled across workers.

mod compare;
mod config;
mod summary;
mod trial;

pub use compare::{compare_records, sign_test, ComparisonReport, PairedOutcome};
pub use config::{
    apply_overrides, schema_help, BenchmarkConfig, ControllerKind, ControllerSettings, EnvironmentConfig,
    EnvironmentKind, EpsilonKind, HarnessConfig, KeyDoc, SCHEMA,
};
pub use summary::{mean_and_sample_std, median, summarize, SummaryTable};
pub use trial::{
    controller_seed, environment_seed, run_trial, run_trial_with, splitmix64, trial_seed, Capture, CycleDump,
    TrialOutcome, TrialRecord, Trajectory,
};

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    /// Sorted by trial index.
    pub records: Vec<TrialRecord>,
    pub summary: SummaryTable,
    pub trajectories: Vec<Trajectory>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs `cfg.harness.num_trials` trials on `cfg.harness.workers` threads.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    cfg.validate()?;
    let capture = Capture {
        trajectory: cfg.harness.dump_trajectories,
        candidates: false,
    };
    let outputs: Vec<(TrialRecord, Option<Trajectory>)> = pool(cfg.harness.workers)?.install(|| {
        (0..cfg.harness.num_trials)
            .into_par_iter()
            .map(|i| run_trial_with(cfg, i, capture, &mut |_, _| {}))
            .collect()
    });
    let mut records = Vec::with_capacity(outputs.len());
    let mut trajectories = Vec::new();
    for (r, t) in outputs {
        records.push(r);
        trajectories.extend(t);
    }
    records.sort_by_key(|r| r.trial_index);
    let summary = summarize(
        &records,
        &cfg.environment.task_name(),
        cfg.controller.kind.as_str(),
        &cfg.config_hash(),
    );
    Ok(BenchmarkResult {
        records,
        summary,
        trajectories,
    })
}

/// One JSON object per line, sorted by trial index.
pub fn records_to_jsonl(records: &[TrialRecord]) -> String {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.trial_index);
    let mut out = String::new();
    for r in sorted {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<TrialRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Serde(format!("line {}: {e}", i + 1))))
        .collect()
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

/// Writes `records.jsonl`, `summary.json`, `summary.txt`, `config.toml` and any
/// trajectory dumps into `dir`.
pub fn write_outputs(dir: &Path, cfg: &BenchmarkConfig, result: &BenchmarkResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join("records.jsonl"), &records_to_jsonl(&result.records))?;
    write(
        dir.join("summary.json"),
        &(serde_json::to_string_pretty(&result.summary)? + "\n"),
    )?;
    write(dir.join("summary.txt"), &result.summary.to_text())?;
    write(dir.join("config.toml"), &cfg.to_toml())?;
    for t in &result.trajectories {
        write(
            dir.join(format!("trajectory_{:04}.json", t.trial_index)),
            &serde_json::to_string(t)?,
        )?;
    }
    Ok(())
}

/// Runs both configurations on the same seeds and pairs the outcomes.
pub fn compare_controllers(a: &BenchmarkConfig, b: &BenchmarkConfig) -> Result<(ComparisonReport, BenchmarkResult, BenchmarkResult)> {
    if a.environment != b.environment {
        return Err(Error::Config("compared configurations use different environments".into()));
    }
    if a.harness.num_trials != b.harness.num_trials {
        return Err(Error::Config(format!(
            "trial counts differ: {} vs {}",
            a.harness.num_trials, b.harness.num_trials
        )));
    }
    if a.harness.base_seed != b.harness.base_seed || a.harness.step_cap != b.harness.step_cap {
        return Err(Error::Config("compared configurations need the same base_seed and step_cap".into()));
    }
    let ra = run_benchmark(a)?;
    let rb = run_benchmark(b)?;
    let report = compare_records(
        a.controller.kind.as_str(),
        &ra.records,
        b.controller.kind.as_str(),
        &rb.records,
    )?;
    Ok((report, ra, rb))
}

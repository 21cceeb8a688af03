//! Aggregation of trial records.

use serde::{Deserialize, Serialize};

use super::trial::{TrialOutcome, TrialRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub task: String,
    pub controller: String,
    pub config_hash: String,
    pub trials: usize,
    pub successes: usize,
    pub crashes: usize,
    pub timeouts: usize,
    pub generation_errors: usize,
    pub faults: usize,
    pub success_percent: f64,
    /// Mean steps over successful trials only.
    pub avg_steps_mean: Option<f64>,
    /// Sample standard deviation (n − 1) of steps over successful trials.
    pub avg_steps_std: Option<f64>,
    /// Meters, over trials that built an environment.
    pub median_final_goal_distance: Option<f64>,
}

pub fn mean_and_sample_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (Some(mean), Some((ss / (n - 1) as f64).sqrt()))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Pure function of the record set; record order does not matter.
pub fn summarize(records: &[TrialRecord], task: &str, controller: &str, config_hash: &str) -> SummaryTable {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.trial_index);
    let count = |o: TrialOutcome| sorted.iter().filter(|r| r.outcome == o).count();
    let steps: Vec<f64> = sorted
        .iter()
        .filter(|r| r.outcome == TrialOutcome::Success)
        .map(|r| r.steps_taken as f64)
        .collect();
    let dists: Vec<f64> = sorted.iter().filter_map(|r| r.final_goal_distance).collect();
    let (avg_steps_mean, avg_steps_std) = mean_and_sample_std(&steps);
    let successes = count(TrialOutcome::Success);
    SummaryTable {
        task: task.to_string(),
        controller: controller.to_string(),
        config_hash: config_hash.to_string(),
        trials: sorted.len(),
        successes,
        crashes: count(TrialOutcome::Crash),
        timeouts: count(TrialOutcome::Timeout),
        generation_errors: count(TrialOutcome::GenerationError),
        faults: count(TrialOutcome::Fault),
        success_percent: if sorted.is_empty() {
            0.0
        } else {
            100.0 * successes as f64 / sorted.len() as f64
        },
        avg_steps_mean,
        avg_steps_std,
        median_final_goal_distance: median(&dists),
    }
}

const ABSENT: &str = "—";

impl SummaryTable {
    /// Aligned text table: task, controller, success rate, steps, distance.
    pub fn to_text(&self) -> String {
        let steps = match (self.avg_steps_mean, self.avg_steps_std) {
            (Some(m), Some(s)) => format!("{m:.1} ± {s:.1}"),
            (Some(m), None) => format!("{m:.1}"),
            _ => ABSENT.to_string(),
        };
        let dist = self
            .median_final_goal_distance
            .map(|d| format!("{d:.3}"))
            .unwrap_or_else(|| ABSENT.to_string());
        let header = ["Task", "Controller", "Trials", "Success (%)", "Avg. Steps", "Median Goal Dist. (m)"];
        let row = [
            self.task.clone(),
            self.controller.clone(),
            self.trials.to_string(),
            format!("{:.2}", self.success_percent),
            steps,
            dist,
        ];
        let widths: Vec<usize> = header
            .iter()
            .zip(&row)
            .map(|(h, r)| h.chars().count().max(r.chars().count()))
            .collect();
        let line = |cells: Vec<String>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(header.iter().map(|s| s.to_string()).collect());
        out.push('\n');
        out.push_str(&line(row.to_vec()));
        out.push('\n');
        out.push_str(&format!(
            "crashes {}  timeouts {}  generation errors {}  faults {}\n",
            self.crashes, self.timeouts, self.generation_errors, self.faults
        ));
        out
    }
}

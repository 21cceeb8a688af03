//! Single seeded episodes.

use std::time::Instant;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::config::BenchmarkConfig;
use crate::controllers::{rollout, ControlRng, CycleDiagnostics};
use crate::envs::{ObstacleField, SUCCESS_RADIUS};
use crate::error::Error;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index`; independent of execution order.
pub fn trial_seed(base_seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(base_seed) ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Seed of the environment stream of a trial.
pub fn environment_seed(trial_seed: u64) -> u64 {
    splitmix64(trial_seed ^ 0x656E_7669_726F_6E6D)
}

/// Seed of the controller stream of a trial.
pub fn controller_seed(trial_seed: u64) -> u64 {
    splitmix64(trial_seed ^ 0x636F_6E74_726F_6C6C)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialOutcome {
    Success,
    Crash,
    Timeout,
    /// The obstacle field could not be generated for this seed.
    GenerationError,
    /// The controller or dynamics raised an error mid-episode.
    Fault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub steps_taken: usize,
    /// Meters; absent when no environment was built.
    pub final_goal_distance: Option<f64>,
    /// Seconds.
    pub wall_time: f64,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One executed cycle in a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleDump {
    pub step: usize,
    /// Candidate control sequences, `horizon × control_dim` each.
    pub candidates: Vec<Vec<Vec<f64>>>,
    /// State sequence of each candidate rolled out from the cycle's state.
    pub paths: Vec<Vec<Vec<f64>>>,
    pub best_index: usize,
    pub diagnostics: CycleDiagnostics,
}

/// Executed states and controls of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub trial_index: usize,
    pub seed: u64,
    pub controller: String,
    pub outcome: TrialOutcome,
    pub field: Option<ObstacleField>,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cycles: Vec<CycleDump>,
}

/// What to capture besides the record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Capture {
    pub trajectory: bool,
    /// Also keep every cycle's candidate plans.
    pub candidates: bool,
}

/// Runs one episode. Errors never escape: they become the record outcome.
pub fn run_trial(cfg: &BenchmarkConfig, index: usize) -> TrialRecord {
    run_trial_with(cfg, index, Capture::default(), &mut |_, _| {}).0
}

/// Runs one episode, calling `observer(step, diagnostics)` after each cycle.
pub fn run_trial_with(
    cfg: &BenchmarkConfig,
    index: usize,
    capture: Capture,
    observer: &mut dyn FnMut(usize, &CycleDiagnostics),
) -> (TrialRecord, Option<Trajectory>) {
    let start = Instant::now();
    let seed = trial_seed(cfg.harness.base_seed, index);
    let mut record = TrialRecord {
        trial_index: index,
        seed,
        outcome: TrialOutcome::GenerationError,
        steps_taken: 0,
        final_goal_distance: None,
        wall_time: 0.0,
        config_hash: cfg.config_hash(),
        error: None,
    };
    let finish = |mut record: TrialRecord| {
        if cfg.harness.record_wall_time {
            record.wall_time = start.elapsed().as_secs_f64();
        }
        record
    };

    let env = match cfg.environment.build(environment_seed(seed)) {
        Ok(env) => env,
        Err(e) => {
            record.error = Some(e.to_string());
            return (finish(record), None);
        }
    };
    let mut controller = cfg.controller.build();
    let weights = cfg.controller.weights();
    let mut rng = ControlRng::seed_from_u64(controller_seed(seed));
    let mut traj = capture.trajectory.then(|| Trajectory {
        trial_index: index,
        seed,
        controller: controller.name().to_string(),
        outcome: TrialOutcome::Timeout,
        field: Some(env.field().clone()),
        states: Vec::new(),
        actions: Vec::new(),
        cycles: Vec::new(),
    });

    let mut x = env.initial_state();
    let mut next = vec![0.0; x.len()];
    if let Some(t) = traj.as_mut() {
        t.states.push(x.clone());
    }
    let result: Result<TrialOutcome, Error> = (|| {
        controller.reset(env.as_ref(), &mut rng)?;
        let mut steps = 0;
        loop {
            if env.crashed(&x) {
                return Ok(TrialOutcome::Crash);
            }
            if env.goal_distance(&x) < SUCCESS_RADIUS {
                return Ok(TrialOutcome::Success);
            }
            if steps == cfg.harness.step_cap {
                return Ok(TrialOutcome::Timeout);
            }
            let out = controller.cycle(env.as_ref(), &x, &mut rng)?;
            observer(steps, &out.diagnostics);
            env.step(&x, &out.action, &mut next);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::EnvironmentFault { timestep: steps });
            }
            std::mem::swap(&mut x, &mut next);
            steps += 1;
            record.steps_taken = steps;
            if let Some(t) = traj.as_mut() {
                t.states.push(x.clone());
                t.actions.push(out.action.clone());
                if capture.candidates {
                    let prev = &t.states[t.states.len() - 2];
                    let paths = out
                        .candidates
                        .iter()
                        .map(|c| rollout(env.as_ref(), &weights, prev, c.as_slice()).map(|r| r.states))
                        .collect::<Result<_, Error>>()?;
                    t.cycles.push(CycleDump {
                        step: steps - 1,
                        candidates: out.candidates.iter().map(|c| c.rows()).collect(),
                        paths,
                        best_index: out.best_index,
                        diagnostics: out.diagnostics.clone(),
                    });
                }
            }
        }
    })();
    record.final_goal_distance = Some(env.goal_distance(&x));
    record.outcome = match result {
        Ok(o) => o,
        Err(e) => {
            record.error = Some(e.to_string());
            TrialOutcome::Fault
        }
    };
    if let Some(t) = traj.as_mut() {
        t.outcome = record.outcome;
    }
    (finish(record), traj)
}

//! Sampling-based receding-horizon controllers.
//!
//! All three controllers share the same cycle shape: sample control sequences,
//! roll them out through the environment, update the sampler state, execute
//! the first control and shift the plan one step forward.

mod cem;
mod mppi;
mod otmpc;
mod proposals;
mod weights;

pub use cem::{Cem, CemConfig};
pub use mppi::{Mppi, MppiConfig};
pub use otmpc::{otmpc_cycle, OtMpc, OtMpcConfig, OtMpcCycle, ParticleInit};
pub use proposals::{sample_global, sample_proposals, GlobalKind, ProposalConfig};
pub use weights::{cem_update, elite_count, gibbs_weights, mppi_update, CemUpdate};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::{task_cost, terminal_cost, ControlBounds, Environment, TaskCostWeights};
use crate::error::{Error, Result};

/// Random source handed to controllers.
pub type ControlRng = ChaCha8Rng;

/// Batches at least this large are rolled out in parallel.
const PARALLEL_BATCH: usize = 16;

/// A horizon × dim block of controls, row-major by timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSequence {
    dim: usize,
    controls: Vec<f64>,
}

impl ControlSequence {
    pub fn new(dim: usize, controls: Vec<f64>) -> Result<Self> {
        if dim == 0 || controls.is_empty() || controls.len() % dim != 0 {
            return Err(Error::dim("control sequence length", dim.max(1), controls.len()));
        }
        if controls.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("control sequence has non-finite entries".into()));
        }
        Ok(Self { dim, controls })
    }

    pub fn zeros(horizon: usize, dim: usize) -> Self {
        Self {
            dim,
            controls: vec![0.0; horizon * dim],
        }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: usize) -> &[f64] {
        &self.controls[t * self.dim..(t + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.at(0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.controls
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.controls
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.controls.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Drops the first step and repeats the last one.
    pub fn shifted(&self) -> Self {
        Self {
            dim: self.dim,
            controls: shift_flat(&self.controls, self.dim),
        }
    }

    pub fn clamp(&mut self, bounds: &ControlBounds) {
        bounds.clamp_in_place(&mut self.controls);
    }
}

pub(crate) fn shift_flat(controls: &[f64], dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(controls.len());
    out.extend_from_slice(&controls[dim..]);
    out.extend_from_slice(&controls[controls.len() - dim..]);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutResult {
    /// `horizon + 1` states, starting with the initial condition.
    pub states: Vec<Vec<f64>>,
    pub total_cost: f64,
    /// `horizon` running costs followed by the terminal cost.
    pub per_step_costs: Vec<f64>,
    pub crashed: bool,
}

fn check_rollout_input<E: Environment + ?Sized>(env: &E, x0: &[f64], controls: &[f64]) -> Result<usize> {
    if x0.len() != env.state_dim() {
        return Err(Error::dim("initial state", env.state_dim(), x0.len()));
    }
    let m = env.control_dim();
    if controls.is_empty() || controls.len() % m != 0 {
        return Err(Error::dim("control sequence length", m, controls.len()));
    }
    Ok(m)
}

/// Simulates `controls` from `x0`, recording every state and cost term.
pub fn rollout<E: Environment + ?Sized>(
    env: &E,
    weights: &TaskCostWeights,
    x0: &[f64],
    controls: &[f64],
) -> Result<RolloutResult> {
    let m = check_rollout_input(env, x0, controls)?;
    let horizon = controls.len() / m;
    let mut states = Vec::with_capacity(horizon + 1);
    let mut per_step_costs = Vec::with_capacity(horizon + 1);
    let mut crashed = false;
    states.push(x0.to_vec());
    for (t, u) in controls.chunks(m).enumerate() {
        let x = &states[t];
        crashed |= env.crashed(x);
        per_step_costs.push(task_cost(env, x, u, weights));
        let mut next = vec![0.0; x.len()];
        env.step(x, u, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::EnvironmentFault { timestep: t });
        }
        states.push(next);
    }
    let last = &states[horizon];
    crashed |= env.crashed(last);
    per_step_costs.push(terminal_cost(env, last, weights));
    let total_cost = per_step_costs.iter().sum();
    Ok(RolloutResult {
        states,
        total_cost,
        per_step_costs,
        crashed,
    })
}

/// Total cost only; bit-identical to `rollout(..).total_cost`.
pub fn rollout_cost<E: Environment + ?Sized>(
    env: &E,
    weights: &TaskCostWeights,
    x0: &[f64],
    controls: &[f64],
) -> Result<f64> {
    let m = check_rollout_input(env, x0, controls)?;
    let mut x = x0.to_vec();
    let mut next = vec![0.0; x.len()];
    let mut total = 0.0;
    for (t, u) in controls.chunks(m).enumerate() {
        total += task_cost(env, &x, u, weights);
        env.step(&x, u, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::EnvironmentFault { timestep: t });
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(total + terminal_cost(env, &x, weights))
}

/// Costs of a batch of control sequences, in batch order.
pub fn evaluate_costs<E: Environment + ?Sized>(
    env: &E,
    weights: &TaskCostWeights,
    x0: &[f64],
    batch: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if batch.len() >= PARALLEL_BATCH {
        batch
            .par_iter()
            .map(|u| rollout_cost(env, weights, x0, u))
            .collect()
    } else {
        batch.iter().map(|u| rollout_cost(env, weights, x0, u)).collect()
    }
}

/// Index of the smallest cost; ties go to the lowest index.
pub fn argmin(costs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &c) in costs.iter().enumerate() {
        if c.is_nan() {
            continue;
        }
        match best {
            Some(b) if costs[b] <= c => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Per-cycle diagnostics, streamed as JSON lines in verbose runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CycleDiagnostics {
    /// Rollout cost of the executed plan.
    pub best_cost: f64,
    /// RMS distance of the candidate plans to their mean.
    pub spread: f64,
    pub inner_iterations: usize,
    pub sinkhorn_iterations: usize,
    /// Set when the cycle could not produce a fresh plan.
    pub failed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleOutput {
    pub action: Vec<f64>,
    pub diagnostics: CycleDiagnostics,
    /// Candidate plans after the update (particles for OT-MPC, the mean
    /// otherwise), before the warm-start shift.
    pub candidates: Vec<ControlSequence>,
    pub best_index: usize,
}

/// Common receding-horizon interface used by the benchmark harness.
pub trait Controller: Send {
    fn name(&self) -> &'static str;
    /// Prepares a fresh episode.
    fn reset(&mut self, env: &dyn Environment, rng: &mut ControlRng) -> Result<()>;
    /// Plans from `x0` and returns the control to execute.
    fn cycle(&mut self, env: &dyn Environment, x0: &[f64], rng: &mut ControlRng) -> Result<CycleOutput>;
}

pub(crate) fn rms_spread(plans: &[Vec<f64>]) -> f64 {
    let n = plans.len();
    if n < 2 {
        return 0.0;
    }
    let len = plans[0].len();
    let mut mean = vec![0.0; len];
    for p in plans {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n as f64;
        }
    }
    let ss: f64 = plans
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>())
        .sum();
    (ss / n as f64).sqrt()
}

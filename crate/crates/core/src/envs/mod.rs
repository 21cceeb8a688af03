//! Deterministic planar environments and their task costs.
//!
//! Every environment shares one cost template: a squared goal distance, an
//! obstacle indicator and a squared control norm, weighted by
//! [`TaskCostWeights`].

mod bicycle;
mod double_integrator;
mod field;

pub use bicycle::{bicycle_step, wrap_angle, BicycleEnv, BicycleParams, BicycleState, STEER_SINGULARITY_MARGIN};
pub use double_integrator::{DoubleIntegratorEnv, DoubleIntegratorParams};
pub use field::{
    bimodal_field, generate_obstacle_field, Difficulty, FieldSpec, Obstacle, ObstacleField, Workspace,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Goal radius, meters. Success needs a strictly smaller distance.
pub const SUCCESS_RADIUS: f64 = 0.3;
/// Default episode length cap, steps.
pub const DEFAULT_STEP_CAP: usize = 200;

/// Box constraints on a control vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ControlBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Config("control bounds need matching, non-empty lower/upper".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::Config("control bounds must be finite with lower <= upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn symmetric(limits: &[f64]) -> Self {
        Self {
            lower: limits.iter().map(|l| -l).collect(),
            upper: limits.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Clamps a flat buffer of stacked control vectors in place.
    pub fn clamp_in_place(&self, controls: &mut [f64]) {
        let m = self.dim();
        for (k, c) in controls.iter_mut().enumerate() {
            let d = k % m;
            *c = c.clamp(self.lower[d], self.upper[d]);
        }
    }

    pub fn contains(&self, controls: &[f64]) -> bool {
        let m = self.dim();
        controls
            .iter()
            .enumerate()
            .all(|(k, c)| *c >= self.lower[k % m] && *c <= self.upper[k % m])
    }
}

/// Nonnegative weights of the task cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskCostWeights {
    /// Squared goal distance, charged at every running step.
    pub goal: f64,
    /// Crash indicator, charged at every step including the last.
    pub obstacle: f64,
    /// Squared control norm.
    pub control: f64,
    /// Squared goal distance at the final state.
    pub terminal_goal: f64,
}

impl TaskCostWeights {
    /// Running and terminal goal weights equal.
    pub fn uniform(goal: f64, obstacle: f64, control: f64) -> Self {
        Self {
            goal,
            obstacle,
            control,
            terminal_goal: goal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.goal, self.obstacle, self.control, self.terminal_goal];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!("cost weights must be finite and nonnegative: {self:?}")));
        }
        Ok(())
    }
}

/// A deterministic discrete-time system with a planar position, a goal and
/// disk obstacles.
pub trait Environment: Send + Sync {
    fn name(&self) -> &'static str;
    fn state_dim(&self) -> usize;
    fn control_bounds(&self) -> &ControlBounds;
    fn initial_state(&self) -> Vec<f64>;
    /// Writes the successor of `x` under `u` into `next`. Controls outside the
    /// bounds are clamped first.
    fn step(&self, x: &[f64], u: &[f64], next: &mut [f64]);
    fn position(&self, x: &[f64]) -> [f64; 2];
    fn field(&self) -> &ObstacleField;

    /// Obstacle growth used by the collision test, meters.
    fn inflation(&self) -> f64 {
        0.0
    }

    fn control_dim(&self) -> usize {
        self.control_bounds().dim()
    }

    fn crashed(&self, x: &[f64]) -> bool {
        self.field().collides(self.position(x), self.inflation())
    }

    fn goal_distance(&self, x: &[f64]) -> f64 {
        let p = self.position(x);
        let g = self.field().goal;
        ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2)).sqrt()
    }
}

fn goal_distance_sq<E: Environment + ?Sized>(env: &E, x: &[f64]) -> f64 {
    let p = env.position(x);
    let g = env.field().goal;
    (p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2)
}

/// Running cost of applying `u` in state `x`.
pub fn task_cost<E: Environment + ?Sized>(env: &E, x: &[f64], u: &[f64], w: &TaskCostWeights) -> f64 {
    let crash = if env.crashed(x) { w.obstacle } else { 0.0 };
    let effort: f64 = u.iter().map(|c| c * c).sum();
    w.goal * goal_distance_sq(env, x) + crash + w.control * effort
}

/// Cost of the final state of a rollout.
pub fn terminal_cost<E: Environment + ?Sized>(env: &E, x: &[f64], w: &TaskCostWeights) -> f64 {
    let crash = if env.crashed(x) { w.obstacle } else { 0.0 };
    w.terminal_goal * goal_distance_sq(env, x) + crash
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Crash,
    Timeout,
}

/// Classifies an episode state trace (initial state first).
///
/// States are scanned in order: a penetration is a crash, reaching the goal
/// radius is a success, and a trace longer than `step_cap + 1` states is cut
/// at the cap.
pub fn success_check<E: Environment + ?Sized>(env: &E, states: &[Vec<f64>], step_cap: usize) -> Outcome {
    for x in states.iter().take(step_cap + 1) {
        if env.crashed(x) {
            return Outcome::Crash;
        }
        if env.goal_distance(x) < SUCCESS_RADIUS {
            return Outcome::Success;
        }
    }
    Outcome::Timeout
}

/// The fixed two-homotopy instance driven by the bicycle model.
pub fn bimodal_toy() -> BicycleEnv {
    BicycleEnv::new(bimodal_field(), BicycleParams::default())
}

/// The fixed two-homotopy instance driven by a double integrator.
pub fn bimodal_toy_double_integrator() -> DoubleIntegratorEnv {
    DoubleIntegratorEnv::new(bimodal_field(), DoubleIntegratorParams::default())
}

//! Kinematic bicycle, explicit Euler.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ControlBounds, Environment, ObstacleField};

/// Steering angles are additionally clamped to this magnitude, radians.
pub const STEER_SINGULARITY_MARGIN: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicycleParams {
    /// Seconds.
    pub dt: f64,
    /// Meters.
    pub wheelbase: f64,
    /// m/s².
    pub accel_max: f64,
    /// Radians.
    pub steer_max: f64,
    /// m/s.
    pub v_min: f64,
    /// m/s.
    pub v_max: f64,
}

impl Default for BicycleParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            wheelbase: 1.0,
            accel_max: 2.0,
            steer_max: 0.6,
            v_min: 0.0,
            v_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicycleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl BicycleState {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.y, self.theta, self.v]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            x: s[0],
            y: s[1],
            theta: s[2],
            v: s[3],
        }
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w <= -PI {
        w += 2.0 * PI;
    } else if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// One Euler step with control `(acceleration, steering)`.
pub fn bicycle_step(s: BicycleState, u: [f64; 2], p: &BicycleParams) -> BicycleState {
    let a = u[0].clamp(-p.accel_max, p.accel_max);
    let lim = p.steer_max.min(STEER_SINGULARITY_MARGIN);
    let delta = u[1].clamp(-lim, lim);
    BicycleState {
        x: s.x + p.dt * s.v * s.theta.cos(),
        y: s.y + p.dt * s.v * s.theta.sin(),
        theta: wrap_angle(s.theta + p.dt * s.v / p.wheelbase * delta.tan()),
        v: (s.v + p.dt * a).clamp(p.v_min, p.v_max),
    }
}

/// Bicycle in an obstacle field. State `(x, y, θ, v)`, control `(a, δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BicycleEnv {
    pub field: ObstacleField,
    pub params: BicycleParams,
    pub initial_speed: f64,
    pub inflation: f64,
    bounds: ControlBounds,
}

impl BicycleEnv {
    pub fn new(field: ObstacleField, params: BicycleParams) -> Self {
        let bounds = ControlBounds::symmetric(&[
            params.accel_max,
            params.steer_max.min(STEER_SINGULARITY_MARGIN),
        ]);
        Self {
            field,
            params,
            initial_speed: 0.0,
            inflation: 0.0,
            bounds,
        }
    }

    pub fn with_initial_speed(mut self, v0: f64) -> Self {
        self.initial_speed = v0.clamp(self.params.v_min, self.params.v_max);
        self
    }

    pub fn with_inflation(mut self, inflation: f64) -> Self {
        self.inflation = inflation;
        self
    }
}

impl Environment for BicycleEnv {
    fn name(&self) -> &'static str {
        "bicycle"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn control_bounds(&self) -> &ControlBounds {
        &self.bounds
    }

    /// At the field start, pointing at the goal.
    fn initial_state(&self) -> Vec<f64> {
        let [sx, sy] = self.field.start;
        let [gx, gy] = self.field.goal;
        vec![sx, sy, wrap_angle((gy - sy).atan2(gx - sx)), self.initial_speed]
    }

    fn step(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        let s = bicycle_step(BicycleState::from_slice(x), [u[0], u[1]], &self.params);
        next.copy_from_slice(&[s.x, s.y, s.theta, s.v]);
    }

    fn position(&self, x: &[f64]) -> [f64; 2] {
        [x[0], x[1]]
    }

    fn field(&self) -> &ObstacleField {
        &self.field
    }

    fn inflation(&self) -> f64 {
        self.inflation
    }
}

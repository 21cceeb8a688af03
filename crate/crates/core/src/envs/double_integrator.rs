//! Planar double integrator: state `(x, y, vx, vy)`, control `(ax, ay)`.

use serde::{Deserialize, Serialize};

use super::{ControlBounds, Environment, ObstacleField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleIntegratorParams {
    pub dt: f64,
    pub accel_max: f64,
}

impl Default for DoubleIntegratorParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            accel_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleIntegratorEnv {
    pub field: ObstacleField,
    pub params: DoubleIntegratorParams,
    bounds: ControlBounds,
}

impl DoubleIntegratorEnv {
    pub fn new(field: ObstacleField, params: DoubleIntegratorParams) -> Self {
        let bounds = ControlBounds::symmetric(&[params.accel_max, params.accel_max]);
        Self { field, params, bounds }
    }
}

impl Environment for DoubleIntegratorEnv {
    fn name(&self) -> &'static str {
        "double-integrator"
    }

    fn state_dim(&self) -> usize {
        4
    }

    fn control_bounds(&self) -> &ControlBounds {
        &self.bounds
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![self.field.start[0], self.field.start[1], 0.0, 0.0]
    }

    fn step(&self, x: &[f64], u: &[f64], next: &mut [f64]) {
        let dt = self.params.dt;
        let a = self.params.accel_max;
        let ax = u[0].clamp(-a, a);
        let ay = u[1].clamp(-a, a);
        next[0] = x[0] + dt * x[2];
        next[1] = x[1] + dt * x[3];
        next[2] = x[2] + dt * ax;
        next[3] = x[3] + dt * ay;
    }

    fn position(&self, x: &[f64]) -> [f64; 2] {
        [x[0], x[1]]
    }

    fn field(&self) -> &ObstacleField {
        &self.field
    }
}

//! Cross-entropy method with smoothed elite statistics.

use rand_distr::StandardNormal;
use rand::Rng;

use super::{
    cem_update, elite_count, evaluate_costs, rollout_cost, shift_flat, ControlRng, ControlSequence, Controller,
    CemUpdate, CycleDiagnostics, CycleOutput,
};
use crate::envs::{Environment, TaskCostWeights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CemConfig {
    pub num_samples: usize,
    pub iterations: usize,
    pub horizon: usize,
    pub elite_fraction: f64,
    pub alpha: f64,
    /// Sampling std at the start of every cycle, one entry per control dimension.
    pub init_std: Vec<f64>,
    pub min_std: f64,
    pub weights: TaskCostWeights,
}

impl CemConfig {
    /// Car-task settings: horizon 70, 5 iterations, 800 samples.
    pub fn car_defaults() -> Self {
        Self {
            num_samples: 800,
            iterations: 5,
            horizon: 70,
            elite_fraction: 0.1,
            alpha: 0.8,
            init_std: vec![1.0, 0.3],
            min_std: 0.01,
            weights: TaskCostWeights::uniform(1.623, 397.3, 0.020),
        }
    }

    pub fn validate(&self, control_dim: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.iterations == 0 || self.horizon == 0 {
            problems.push("iterations and horizon must be >= 1".to_string());
        }
        if let Err(e) = elite_count(self.num_samples, self.elite_fraction) {
            problems.push(e.to_string());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            problems.push(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.init_std.len() != control_dim || self.init_std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            problems.push(format!("init_std needs {control_dim} positive entries"));
        }
        if !(self.min_std >= 0.0 && self.min_std.is_finite()) {
            problems.push("min_std must be finite and >= 0".to_string());
        }
        if let Err(e) = self.weights.validate() {
            problems.push(e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cem {
    pub cfg: CemConfig,
    mean: Vec<f64>,
}

impl Cem {
    pub fn new(cfg: CemConfig) -> Self {
        Self { cfg, mean: Vec::new() }
    }
}

impl Controller for Cem {
    fn name(&self) -> &'static str {
        "cem"
    }

    fn reset(&mut self, env: &dyn Environment, _rng: &mut ControlRng) -> Result<()> {
        self.cfg.validate(env.control_dim())?;
        let mut z = vec![0.0; self.cfg.horizon * env.control_dim()];
        env.control_bounds().clamp_in_place(&mut z);
        self.mean = z;
        Ok(())
    }

    fn cycle(&mut self, env: &dyn Environment, x0: &[f64], rng: &mut ControlRng) -> Result<CycleOutput> {
        let m = env.control_dim();
        if self.mean.is_empty() {
            self.reset(env, rng)?;
        }
        self.cfg.validate(m)?;
        let bounds = env.control_bounds();
        let len = self.mean.len();
        let update = CemUpdate {
            elite_fraction: self.cfg.elite_fraction,
            alpha: self.cfg.alpha,
            min_std: self.cfg.min_std,
        };
        let mut mean = self.mean.clone();
        let mut std: Vec<f64> = (0..len).map(|k| self.cfg.init_std[k % m]).collect();
        for _ in 0..self.cfg.iterations {
            let samples: Vec<Vec<f64>> = (0..self.cfg.num_samples)
                .map(|_| {
                    let mut y: Vec<f64> = mean
                        .iter()
                        .zip(&std)
                        .map(|(mu, s)| mu + s * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    bounds.clamp_in_place(&mut y);
                    y
                })
                .collect();
            let costs = evaluate_costs(env, &self.cfg.weights, x0, &samples)?;
            let (new_mean, new_std) = cem_update(&samples, &costs, &mean, &std, &update)?;
            mean = new_mean;
            std = new_std;
            bounds.clamp_in_place(&mut mean);
        }
        let best_cost = rollout_cost(env, &self.cfg.weights, x0, &mean)?;
        let action = mean[..m].to_vec();
        self.mean = shift_flat(&mean, m);
        Ok(CycleOutput {
            action,
            diagnostics: CycleDiagnostics {
                best_cost,
                inner_iterations: self.cfg.iterations,
                ..CycleDiagnostics::default()
            },
            candidates: vec![ControlSequence::new(m, mean)?],
            best_index: 0,
        })
    }
}

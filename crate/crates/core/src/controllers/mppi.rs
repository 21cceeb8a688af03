//! Model predictive path integral control.

use super::{
    evaluate_costs, mppi_update, rollout_cost, sample_proposals, shift_flat, ControlRng, ControlSequence,
    Controller, CycleDiagnostics, CycleOutput, GlobalKind, ProposalConfig,
};
use crate::envs::{Environment, TaskCostWeights};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MppiConfig {
    pub num_samples: usize,
    pub iterations: usize,
    pub beta: f64,
    pub horizon: usize,
    /// Samples are drawn from this mixture around the single mean sequence.
    pub proposal: ProposalConfig,
    pub weights: TaskCostWeights,
}

impl MppiConfig {
    /// Car-task settings: horizon 30, 8 iterations, 500 samples, β 1.019.
    pub fn car_defaults() -> Self {
        Self {
            num_samples: 500,
            iterations: 8,
            beta: 1.019,
            horizon: 30,
            proposal: ProposalConfig {
                rho: 0.0,
                local_sigma: vec![0.5, 0.15],
                temporal_correlation: 0.8,
                global_kind: GlobalKind::BroadGaussian,
                global_scale: vec![1.0, 0.4],
            },
            weights: TaskCostWeights::uniform(4.854, 281.1, 0.046),
        }
    }

    pub fn validate(&self, control_dim: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.num_samples == 0 || self.iterations == 0 || self.horizon == 0 {
            problems.push("num_samples, iterations and horizon must be >= 1".to_string());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            problems.push(format!("beta must be finite and >= 0, got {}", self.beta));
        }
        for r in [self.proposal.validate(control_dim), self.weights.validate()] {
            if let Err(e) = r {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mppi {
    pub cfg: MppiConfig,
    mean: Vec<f64>,
}

impl Mppi {
    pub fn new(cfg: MppiConfig) -> Self {
        Self { cfg, mean: Vec::new() }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

impl Controller for Mppi {
    fn name(&self) -> &'static str {
        "mppi"
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
        let mut mean = self.mean.clone();
        for _ in 0..self.cfg.iterations {
            let ys = sample_proposals(
                std::slice::from_ref(&mean),
                &self.cfg.proposal,
                bounds,
                self.cfg.num_samples,
                rng,
            )?;
            let costs = evaluate_costs(env, &self.cfg.weights, x0, &ys)?;
            let perturbations: Vec<Vec<f64>> = ys
                .iter()
                .map(|y| y.iter().zip(&mean).map(|(a, b)| a - b).collect())
                .collect();
            mean = mppi_update(&mean, &perturbations, &costs, self.cfg.beta, bounds)?;
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

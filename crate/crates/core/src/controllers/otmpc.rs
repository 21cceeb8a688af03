//! Transport-based MPC: a particle ensemble refined by Sinkhorn coordinate
//! descent against freshly sampled, Gibbs-weighted proposals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    argmin, evaluate_costs, rms_spread, sample_global, sample_proposals, shift_flat, ControlRng,
    ControlSequence, Controller, CycleDiagnostics, CycleOutput, GlobalKind, ProposalConfig,
};
use crate::envs::{Environment, TaskCostWeights};
use crate::error::{Error, Result};
use crate::scd::{scd_run, EpsilonRule, ParticleEnsemble, ProposalBatch, ScdConfig, ScdTrace};
use crate::transport::SinkhornConfig;

/// How particles are initialized at episode start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParticleInit {
    /// Every particle is the zero sequence (clamped to the bounds).
    Zeros,
    /// Every particle is an independent draw from the global proposal component.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OtMpcConfig {
    pub num_particles: usize,
    pub num_proposals: usize,
    /// SCD iterations per cycle, each with a fresh proposal batch.
    pub inner_iterations: usize,
    pub beta: f64,
    /// Timesteps per plan.
    pub horizon: usize,
    /// Coupling settings. `max_outer_iterations` and
    /// `resample_each_iteration` are overridden by the cycle.
    pub scd: ScdConfig<f64>,
    pub proposal: ProposalConfig,
    pub init: ParticleInit,
    pub weights: TaskCostWeights,
}

impl OtMpcConfig {
    /// Car-task settings: horizon 70, 8 iterations, 200 proposals, β 0.46,
    /// 20 particles.
    pub fn car_defaults() -> Self {
        let mut scd = ScdConfig::new(EpsilonRule::MedianCost(0.05));
        scd.eta = 0.5;
        scd.displacement_tol = 0.0;
        scd.sinkhorn = SinkhornConfig::new(1.0).with_tolerance(1e-6).with_max_iterations(500);
        Self {
            num_particles: 20,
            num_proposals: 200,
            inner_iterations: 8,
            beta: 0.460,
            horizon: 70,
            scd,
            proposal: ProposalConfig {
                rho: 0.1,
                local_sigma: vec![0.5, 0.15],
                temporal_correlation: 0.8,
                global_kind: GlobalKind::BroadGaussian,
                global_scale: vec![1.0, 0.4],
            },
            init: ParticleInit::Random,
            weights: TaskCostWeights::uniform(0.704, 479.0, 0.08),
        }
    }

    pub fn validate(&self, control_dim: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.num_particles == 0 {
            problems.push("num_particles must be >= 1".to_string());
        }
        if self.num_proposals == 0 {
            problems.push("num_proposals must be >= 1".to_string());
        }
        if self.inner_iterations == 0 {
            problems.push("inner_iterations must be >= 1".to_string());
        }
        if self.horizon == 0 {
            problems.push("horizon must be >= 1".to_string());
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            problems.push(format!("beta must be finite and > 0, got {}", self.beta));
        }
        for r in [self.proposal.validate(control_dim), self.weights.validate(), self.scd.validate()] {
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

/// Everything one cycle produces.
#[derive(Debug, Clone)]
pub struct OtMpcCycle {
    pub action: Vec<f64>,
    pub best_index: usize,
    /// Particles after the SCD iterations.
    pub particles: Vec<Vec<f64>>,
    pub particle_costs: Vec<f64>,
    /// Particles shifted one step for the next cycle.
    pub next_particles: Vec<Vec<f64>>,
    pub trace: ScdTrace,
}

/// One planning cycle from state `x0`.
pub fn otmpc_cycle<E, R>(
    particles: &[Vec<f64>],
    x0: &[f64],
    env: &E,
    cfg: &OtMpcConfig,
    rng: &mut R,
) -> Result<OtMpcCycle>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
{
    let m = env.control_dim();
    cfg.validate(m)?;
    let len = cfg.horizon * m;
    if particles.len() != cfg.num_particles {
        return Err(Error::dim("particle count", cfg.num_particles, particles.len()));
    }
    if let Some(p) = particles.iter().find(|p| p.len() != len) {
        return Err(Error::dim("particle length", len, p.len()));
    }
    let bounds = env.control_bounds();
    let mut scd_cfg = cfg.scd.clone();
    scd_cfg.max_outer_iterations = cfg.inner_iterations;
    scd_cfg.resample_each_iteration = true;

    let ensemble = ParticleEnsemble::uniform(particles.to_vec())?;
    let source = |_: usize, ens: &ParticleEnsemble<f64>| {
        let ys = sample_proposals(ens.particles(), &cfg.proposal, bounds, cfg.num_proposals, &mut *rng)?;
        let costs = evaluate_costs(env, &cfg.weights, x0, &ys)?;
        ProposalBatch::from_costs(ys, &costs, cfg.beta)
    };
    let (ensemble, trace) = scd_run(ensemble, source, &scd_cfg)?;

    let mut particles = ensemble.into_particles();
    for p in &mut particles {
        bounds.clamp_in_place(p);
    }
    let particle_costs = evaluate_costs(env, &cfg.weights, x0, &particles)?;
    let best_index = argmin(&particle_costs)
        .ok_or_else(|| Error::Domain("every particle cost is NaN".into()))?;
    let action = particles[best_index][..m].to_vec();
    let next_particles = particles.iter().map(|p| shift_flat(p, m)).collect();
    Ok(OtMpcCycle {
        action,
        best_index,
        particles,
        particle_costs,
        next_particles,
        trace,
    })
}

/// Stateful wrapper carrying the ensemble across cycles.
#[derive(Debug, Clone)]
pub struct OtMpc {
    pub cfg: OtMpcConfig,
    particles: Vec<Vec<f64>>,
    /// Previous best plan, shifted; used when a cycle fails outright.
    fallback: Option<Vec<f64>>,
}

impl OtMpc {
    pub fn new(cfg: OtMpcConfig) -> Self {
        Self {
            cfg,
            particles: Vec::new(),
            fallback: None,
        }
    }

    pub fn particles(&self) -> &[Vec<f64>] {
        &self.particles
    }

    /// Replaces the ensemble, e.g. to seed a custom initialization.
    pub fn set_particles(&mut self, particles: Vec<Vec<f64>>) {
        self.particles = particles;
    }
}

fn is_fatal(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_) | Error::Dimension { .. } | Error::EnvironmentFault { .. }
    )
}

impl Controller for OtMpc {
    fn name(&self) -> &'static str {
        "otmpc"
    }

    fn reset(&mut self, env: &dyn Environment, rng: &mut ControlRng) -> Result<()> {
        let m = env.control_dim();
        self.cfg.validate(m)?;
        let bounds = env.control_bounds();
        let len = self.cfg.horizon * m;
        self.particles = (0..self.cfg.num_particles)
            .map(|_| match self.cfg.init {
                ParticleInit::Zeros => {
                    let mut z = vec![0.0; len];
                    bounds.clamp_in_place(&mut z);
                    z
                }
                ParticleInit::Random => sample_global(&self.cfg.proposal, bounds, len, rng),
            })
            .collect();
        self.fallback = None;
        Ok(())
    }

    fn cycle(&mut self, env: &dyn Environment, x0: &[f64], rng: &mut ControlRng) -> Result<CycleOutput> {
        let m = env.control_dim();
        if self.particles.is_empty() {
            self.reset(env, rng)?;
        }
        match otmpc_cycle(&self.particles, x0, env, &self.cfg, rng) {
            Ok(out) => {
                let diagnostics = CycleDiagnostics {
                    best_cost: out.particle_costs[out.best_index],
                    spread: rms_spread(&out.particles),
                    inner_iterations: out.trace.records.len(),
                    sinkhorn_iterations: out.trace.records.iter().map(|r| r.sinkhorn_iterations).sum(),
                    failed: false,
                    error: out.trace.error.clone(),
                };
                self.fallback = Some(out.next_particles[out.best_index].clone());
                self.particles = out.next_particles;
                let candidates = out
                    .particles
                    .into_iter()
                    .map(|p| ControlSequence::new(m, p))
                    .collect::<Result<_>>()?;
                Ok(CycleOutput {
                    action: out.action,
                    diagnostics,
                    candidates,
                    best_index: out.best_index,
                })
            }
            Err(e) if is_fatal(&e) => Err(e),
            Err(e) => {
                let plan = self.fallback.take().unwrap_or_else(|| {
                    let mut z = vec![0.0; self.cfg.horizon * m];
                    env.control_bounds().clamp_in_place(&mut z);
                    z
                });
                let action = plan[..m].to_vec();
                self.fallback = Some(shift_flat(&plan, m));
                self.particles = self.particles.iter().map(|p| shift_flat(p, m)).collect();
                Ok(CycleOutput {
                    action,
                    diagnostics: CycleDiagnostics {
                        best_cost: f64::NAN,
                        failed: true,
                        error: Some(e.to_string()),
                        ..CycleDiagnostics::default()
                    },
                    candidates: vec![ControlSequence::new(m, plan)?],
                    best_index: 0,
                })
            }
        }
    }
}

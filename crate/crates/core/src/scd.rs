//! Sinkhorn coordinate descent.
//!
//! Each outer iteration builds the cost matrix between the current particles
//! and the proposals, solves the entropic coupling, and moves every particle a
//! fraction `η` of the way to its barycentric projection.

use serde::Serialize;

use crate::barycenter::{generalized_update, interpolate, BarycentricWeights};
use crate::error::{Error, Result};
use crate::family::CostFamily;
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::transport::{build_cost_matrix, eot_objective, sinkhorn, Coupling, CostMatrix, Scalings, SinkhornConfig, Simplex};

/// N particles with simplex weights `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<T: Scalar> {
    particles: Vec<Vec<T>>,
    weights: Simplex<T>,
}

fn check_points<T: Scalar>(what: &'static str, points: &[Vec<T>]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::Domain(format!("{what}: need at least one point")))?;
    let dim = first.len();
    for p in points {
        if p.len() != dim {
            return Err(Error::dim(what, dim, p.len()));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("{what}: non-finite coordinate")));
        }
    }
    Ok(dim)
}

impl<T: Scalar> ParticleEnsemble<T> {
    pub fn new(particles: Vec<Vec<T>>, weights: Simplex<T>) -> Result<Self> {
        check_points("particles", &particles)?;
        if weights.len() != particles.len() {
            return Err(Error::dim("particle weights", particles.len(), weights.len()));
        }
        Ok(Self { particles, weights })
    }

    /// Uniform weights `q_i = 1/N`.
    pub fn uniform(particles: Vec<Vec<T>>) -> Result<Self> {
        let n = particles.len();
        Self::new(particles, Simplex::uniform(n.max(1))?)
    }

    pub fn particles(&self) -> &[Vec<T>] {
        &self.particles
    }

    pub fn weights(&self) -> &Simplex<T> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.particles[0].len()
    }

    pub fn into_particles(self) -> Vec<Vec<T>> {
        self.particles
    }

    /// Same weights, new positions.
    pub fn with_particles(&self, particles: Vec<Vec<T>>) -> Result<Self> {
        Self::new(particles, self.weights.clone())
    }
}

/// M proposals with target weights `p = softmax(raw_scores)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalBatch<T: Scalar> {
    proposals: Vec<Vec<T>>,
    weights: Simplex<T>,
    raw_scores: Vec<T>,
}

impl<T: Scalar> ProposalBatch<T> {
    /// Weights from a max-shifted softmax of `raw_scores`.
    pub fn from_scores(proposals: Vec<Vec<T>>, raw_scores: Vec<T>) -> Result<Self> {
        check_points("proposals", &proposals)?;
        if raw_scores.len() != proposals.len() {
            return Err(Error::dim("proposal scores", proposals.len(), raw_scores.len()));
        }
        let weights = Simplex::softmax(&raw_scores)?;
        Ok(Self {
            proposals,
            weights,
            raw_scores,
        })
    }

    /// Gibbs weights `p_j ∝ exp(−β S_j)`.
    pub fn from_costs(proposals: Vec<Vec<T>>, costs: &[T], beta: T) -> Result<Self> {
        let scores = costs.iter().map(|&s| -beta * s).collect();
        Self::from_scores(proposals, scores)
    }

    /// Equal weights.
    pub fn uniform(proposals: Vec<Vec<T>>) -> Result<Self> {
        let m = proposals.len();
        Self::from_scores(proposals, vec![T::zero(); m])
    }

    pub fn proposals(&self) -> &[Vec<T>] {
        &self.proposals
    }

    pub fn weights(&self) -> &Simplex<T> {
        &self.weights
    }

    pub fn raw_scores(&self) -> &[T] {
        &self.raw_scores
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }
}

/// How the entropic regularization is chosen for each coupling solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonRule<T> {
    /// Fixed ε in cost units.
    Absolute(T),
    /// ε = factor × median cost-matrix entry.
    MedianCost(T),
    /// ε = factor × largest cost-matrix entry.
    MaxCost(T),
}

impl<T: Scalar> EpsilonRule<T> {
    pub fn resolve(&self, cost: &CostMatrix<T>) -> T {
        let scaled = |factor: T, scale: T| {
            if scale > T::zero() {
                factor * scale
            } else {
                // all costs zero: every ε gives the independent coupling
                factor
            }
        };
        match *self {
            EpsilonRule::Absolute(e) => e,
            EpsilonRule::MedianCost(f) => scaled(f, cost.median()),
            EpsilonRule::MaxCost(f) => scaled(f, cost.max()),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            EpsilonRule::Absolute(v) | EpsilonRule::MedianCost(v) | EpsilonRule::MaxCost(v) => v,
        };
        if !(v.is_finite() && v > T::zero()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScdConfig<T: Scalar> {
    pub epsilon: EpsilonRule<T>,
    /// Relaxation step toward the barycenter, in (0, 1].
    pub eta: T,
    pub max_outer_iterations: usize,
    /// Stop once the largest particle move is below this (0 disables).
    pub displacement_tol: T,
    /// Stop once `(L_k − L_{k+1}) / L_k` is below this (0 disables). Only
    /// checked when proposals are fixed.
    pub relative_improvement_tol: T,
    pub resample_each_iteration: bool,
    pub family: CostFamily<T>,
    /// Inner solver settings; its `epsilon` is replaced by the resolved rule.
    pub sinkhorn: SinkhornConfig<T>,
}

impl<T: Scalar> ScdConfig<T> {
    pub fn new(epsilon: EpsilonRule<T>) -> Self {
        Self {
            epsilon,
            eta: T::one(),
            max_outer_iterations: 50,
            displacement_tol: T::lit(1e-8),
            relative_improvement_tol: T::zero(),
            resample_each_iteration: false,
            family: CostFamily::Quadratic,
            sinkhorn: SinkhornConfig::new(T::one()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.epsilon.validate()?;
        if !(self.eta > T::zero() && self.eta <= T::one()) {
            return Err(Error::Config(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if !(self.displacement_tol >= T::zero() && self.relative_improvement_tol >= T::zero()) {
            return Err(Error::Config("stopping tolerances must be >= 0".into()));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::Config("max_outer_iterations must be >= 1".into()));
        }
        if !(self.sinkhorn.tolerance > T::zero()) || self.sinkhorn.max_iterations == 0 {
            return Err(Error::Config("sinkhorn tolerance and iteration cap must be positive".into()));
        }
        self.family.validate()
    }
}

/// Result of one outer iteration.
#[derive(Debug, Clone)]
pub struct ScdStep<T: Scalar> {
    pub ensemble: ParticleEnsemble<T>,
    pub coupling: Coupling<T>,
    /// `L_ε(z_new, Γ)` with Γ the coupling solved at the old positions.
    pub objective: T,
    pub epsilon: T,
    pub max_displacement: T,
}

/// One coupling solve followed by a relaxed particle update.
pub fn scd_step<T: Scalar>(
    ensemble: &ParticleEnsemble<T>,
    batch: &ProposalBatch<T>,
    cfg: &ScdConfig<T>,
) -> Result<ScdStep<T>> {
    cfg.validate()?;
    step_inner(ensemble, batch, cfg, None)
}

fn step_inner<T: Scalar>(
    ensemble: &ParticleEnsemble<T>,
    batch: &ProposalBatch<T>,
    cfg: &ScdConfig<T>,
    warm: Option<Scalings<T>>,
) -> Result<ScdStep<T>> {
    if ensemble.dim() != batch.proposals()[0].len() {
        return Err(Error::dim("proposal vs particle dimension", ensemble.dim(), batch.proposals()[0].len()));
    }
    let cost = build_cost_matrix(ensemble.particles(), batch.proposals(), &cfg.family)?;
    let epsilon = cfg.epsilon.resolve(&cost);
    let mut sink = cfg.sinkhorn.clone();
    sink.epsilon = epsilon;
    sink.warm_start = warm;
    let coupling = sinkhorn(&cost, ensemble.weights(), batch.weights(), &sink)?;

    let weights = BarycentricWeights::from_plan(coupling.plan())?;
    let targets = generalized_update(&weights, batch.proposals(), &cfg.family)?;
    let mut moved = Vec::with_capacity(ensemble.len());
    let mut max_displacement = T::zero();
    for (z, b) in ensemble.particles().iter().zip(&targets) {
        let next = interpolate(&cfg.family, z, b, cfg.eta)?;
        let d = z
            .iter()
            .zip(&next)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        max_displacement = max_displacement.max(d);
        moved.push(next);
    }
    let ensemble = ensemble.with_particles(moved)?;
    let objective = objective_of(&ensemble, batch, coupling.plan(), epsilon, &cfg.family)?;
    Ok(ScdStep {
        ensemble,
        coupling,
        objective,
        epsilon,
        max_displacement,
    })
}

/// `L_ε(z, Γ; y)` with the cost matrix rebuilt from the current particles.
pub fn objective_of<T: Scalar>(
    ensemble: &ParticleEnsemble<T>,
    batch: &ProposalBatch<T>,
    plan: &Matrix<T>,
    epsilon: T,
    family: &CostFamily<T>,
) -> Result<T> {
    let cost = build_cost_matrix(ensemble.particles(), batch.proposals(), family)?;
    eot_objective(&cost, plan, epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Displacement,
    RelativeImprovement,
    IterationCap,
    StepError,
}

/// Diagnostics for one completed outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScdRecord {
    pub iteration: usize,
    pub objective: f64,
    pub max_displacement: f64,
    pub epsilon: f64,
    pub sinkhorn_iterations: usize,
    pub sinkhorn_converged: bool,
    pub row_marginal_error: f64,
    pub col_marginal_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScdTrace {
    pub records: Vec<ScdRecord>,
    pub stop_reason: StopReason,
    /// Set when a step failed after at least one successful iteration.
    pub error: Option<String>,
}

impl ScdTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// One JSON object per line, one line per iteration.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("plain record serializes"));
            out.push('\n');
        }
        out
    }
}

/// Iterates [`scd_step`] until a stopping rule fires.
///
/// `proposal_source(k, ensemble)` supplies the batch for iteration `k`. With
/// `resample_each_iteration == false` it is called once and the batch reused;
/// couplings are then warm-started from the previous scalings.
pub fn scd_run<T, F>(
    ensemble: ParticleEnsemble<T>,
    mut proposal_source: F,
    cfg: &ScdConfig<T>,
) -> Result<(ParticleEnsemble<T>, ScdTrace)>
where
    T: Scalar,
    F: FnMut(usize, &ParticleEnsemble<T>) -> Result<ProposalBatch<T>>,
{
    cfg.validate()?;
    let mut current = ensemble;
    let mut records: Vec<ScdRecord> = Vec::new();
    let mut fixed_batch: Option<ProposalBatch<T>> = None;
    let mut warm: Option<Scalings<T>> = None;
    let mut stop_reason = StopReason::IterationCap;
    let mut error = None;

    for k in 0..cfg.max_outer_iterations {
        let attempt = (|| {
            let batch = if cfg.resample_each_iteration {
                proposal_source(k, &current)?
            } else {
                match fixed_batch.take() {
                    Some(b) => b,
                    None => proposal_source(k, &current)?,
                }
            };
            let step = step_inner(&current, &batch, cfg, warm.take())?;
            Ok::<_, Error>((batch, step))
        })();

        let (batch, step) = match attempt {
            Ok(v) => v,
            Err(e) if records.is_empty() => return Err(e),
            Err(e) => {
                stop_reason = StopReason::StepError;
                error = Some(e.to_string());
                break;
            }
        };

        records.push(ScdRecord {
            iteration: k,
            objective: step.objective.to_f64_lossy(),
            max_displacement: step.max_displacement.to_f64_lossy(),
            epsilon: step.epsilon.to_f64_lossy(),
            sinkhorn_iterations: step.coupling.iterations_used,
            sinkhorn_converged: step.coupling.converged,
            row_marginal_error: step.coupling.row_marginal_error.to_f64_lossy(),
            col_marginal_error: step.coupling.col_marginal_error.to_f64_lossy(),
        });
        if !cfg.resample_each_iteration {
            warm = Some(step.coupling.scalings().clone());
            fixed_batch = Some(batch);
        }
        let displacement = step.max_displacement;
        current = step.ensemble;

        if cfg.displacement_tol > T::zero() && displacement < cfg.displacement_tol {
            stop_reason = StopReason::Displacement;
            break;
        }
        if !cfg.resample_each_iteration && cfg.relative_improvement_tol > T::zero() && records.len() >= 2 {
            let prev = records[records.len() - 2].objective;
            let cur = records[records.len() - 1].objective;
            if prev > 0.0 && (prev - cur) / prev < cfg.relative_improvement_tol.to_f64_lossy() {
                stop_reason = StopReason::RelativeImprovement;
                break;
            }
        }
    }

    Ok((
        current,
        ScdTrace {
            records,
            stop_reason,
            error,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(eps: f64) -> ScdConfig<f64> {
        ScdConfig::new(EpsilonRule::Absolute(eps))
    }

    #[test]
    fn single_particle_recovers_weighted_mean() {
        let ys = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![4.0, 3.0]];
        let batch = ProposalBatch::from_costs(ys.clone(), &[1.0, 0.5, 2.0], 1.3).unwrap();
        let ens = ParticleEnsemble::uniform(vec![vec![10.0, 10.0]]).unwrap();
        let step = scd_step(&ens, &batch, &cfg(0.1)).unwrap();
        let p = batch.weights().as_slice();
        for d in 0..2 {
            let mean: f64 = (0..3).map(|j| p[j] * ys[j][d]).sum();
            assert!((step.ensemble.particles()[0][d] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_zero_rejected() {
        let mut c = cfg(1.0);
        c.eta = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_proposal_collapses_in_one_step() {
        let batch = ProposalBatch::uniform(vec![vec![1.5, -2.0]]).unwrap();
        let ens = ParticleEnsemble::uniform(vec![vec![0.0, 0.0], vec![3.0, 1.0], vec![-1.0, 5.0]]).unwrap();
        let (out, trace) = scd_run(ens, |_, _| Ok(batch.clone()), &cfg(0.5)).unwrap();
        for z in out.particles() {
            assert_eq!(z, &vec![1.5, -2.0]);
        }
        assert_eq!(trace.stop_reason, StopReason::Displacement);
        assert_eq!(trace.records.len(), 2);
    }

    #[test]
    fn source_error_on_first_iteration_propagates() {
        let ens = ParticleEnsemble::uniform(vec![vec![0.0]]).unwrap();
        let r = scd_run(ens, |_, _| Err(Error::Domain("boom".into())), &cfg(1.0));
        assert!(r.is_err());
    }

    #[test]
    fn later_step_error_keeps_last_good_ensemble() {
        let mut c = cfg(1.0);
        c.resample_each_iteration = true;
        c.displacement_tol = 0.0;
        c.max_outer_iterations = 5;
        let ens = ParticleEnsemble::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let (out, trace) = scd_run(
            ens,
            |k, _| {
                if k < 2 {
                    ProposalBatch::uniform(vec![vec![0.0], vec![2.0]])
                } else {
                    Err(Error::Domain("sampler fault".into()))
                }
            },
            &c,
        )
        .unwrap();
        assert_eq!(trace.records.len(), 2);
        assert_eq!(trace.stop_reason, StopReason::StepError);
        assert!(trace.error.as_deref().unwrap().contains("sampler fault"));
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn trace_serializes_one_line_per_iteration() {
        let batch = ProposalBatch::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        let mut c = cfg(0.2);
        c.displacement_tol = 0.0;
        c.max_outer_iterations = 3;
        let ens = ParticleEnsemble::uniform(vec![vec![0.2], vec![0.9]]).unwrap();
        let (_, trace) = scd_run(ens, |_, _| Ok(batch.clone()), &c).unwrap();
        let text = trace.to_json_lines();
        assert_eq!(text.lines().count(), 3);
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("objective").is_some());
        }
    }
}

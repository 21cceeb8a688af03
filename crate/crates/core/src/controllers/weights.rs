//! Sample weighting and the MPPI / CEM update rules.

use crate::envs::ControlBounds;
use crate::error::{Error, Result};
use crate::transport::Simplex;

/// Gibbs weights `w_j ∝ exp(−β (S_j − min S))`.
pub fn gibbs_weights(costs: &[f64], beta: f64) -> Result<Simplex<f64>> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!("inverse temperature must be finite and >= 0, got {beta}")));
    }
    if let Some(j) = costs.iter().position(|c| !c.is_finite()) {
        return Err(Error::Domain(format!("cost {j} is not finite ({})", costs[j])));
    }
    let scores: Vec<f64> = costs.iter().map(|&s| -beta * s).collect();
    Simplex::softmax(&scores)
}

/// `mean + Σ_j w_j δu_j`, clamped to `bounds`.
pub fn mppi_update(
    mean: &[f64],
    perturbations: &[Vec<f64>],
    costs: &[f64],
    beta: f64,
    bounds: &ControlBounds,
) -> Result<Vec<f64>> {
    if perturbations.len() != costs.len() {
        return Err(Error::dim("mppi costs", perturbations.len(), costs.len()));
    }
    let w = gibbs_weights(costs, beta)?;
    let mut out = mean.to_vec();
    for (du, &wj) in perturbations.iter().zip(w.as_slice()) {
        if du.len() != mean.len() {
            return Err(Error::dim("mppi perturbation", mean.len(), du.len()));
        }
        for (o, d) in out.iter_mut().zip(du) {
            *o += wj * d;
        }
    }
    bounds.clamp_in_place(&mut out);
    Ok(out)
}

/// Settings of the elite-based update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CemUpdate {
    pub elite_fraction: f64,
    pub alpha: f64,
    pub min_std: f64,
}

/// Number of elites kept from `m` samples.
pub fn elite_count(m: usize, elite_fraction: f64) -> Result<usize> {
    if !(elite_fraction > 0.0 && elite_fraction <= 1.0) {
        return Err(Error::Config(format!("elite_fraction must lie in (0, 1], got {elite_fraction}")));
    }
    let n = (m as f64 * elite_fraction + 1e-9).floor() as usize;
    if n == 0 {
        return Err(Error::Config(format!(
            "{m} samples with elite_fraction {elite_fraction} leave no elite"
        )));
    }
    Ok(n.min(m))
}

/// Elite mean and standard deviation blended with the prior:
/// `α · elite + (1 − α) · prior`, with the std floored at `min_std`.
///
/// Elites are the lowest-cost samples; equal costs keep the lower index.
pub fn cem_update(
    samples: &[Vec<f64>],
    costs: &[f64],
    prior_mean: &[f64],
    prior_std: &[f64],
    cfg: &CemUpdate,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() != costs.len() {
        return Err(Error::dim("cem costs", samples.len(), costs.len()));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", cfg.alpha)));
    }
    let n = elite_count(samples.len(), cfg.elite_fraction)?;
    let dim = prior_mean.len();
    if prior_std.len() != dim {
        return Err(Error::dim("cem prior std", dim, prior_std.len()));
    }
    if let Some(j) = costs.iter().position(|c| c.is_nan()) {
        return Err(Error::Domain(format!("cost {j} is NaN")));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    let elites = &order[..n];

    let mut mean = vec![0.0; dim];
    for &e in elites {
        if samples[e].len() != dim {
            return Err(Error::dim("cem sample", dim, samples[e].len()));
        }
        for (m, s) in mean.iter_mut().zip(&samples[e]) {
            *m += s;
        }
    }
    let inv = 1.0 / n as f64;
    mean.iter_mut().for_each(|m| *m *= inv);
    let mut var = vec![0.0; dim];
    for &e in elites {
        for ((v, s), m) in var.iter_mut().zip(&samples[e]).zip(&mean) {
            *v += (s - m) * (s - m);
        }
    }
    let a = cfg.alpha;
    let new_mean = mean
        .iter()
        .zip(prior_mean)
        .map(|(m, p)| a * m + (1.0 - a) * p)
        .collect();
    let new_std = var
        .iter()
        .zip(prior_std)
        .map(|(v, p)| (a * (v * inv).sqrt() + (1.0 - a) * p).max(cfg.min_std))
        .collect();
    Ok((new_mean, new_std))
}

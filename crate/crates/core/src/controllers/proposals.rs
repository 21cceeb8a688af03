//! Mixture proposal sampler: AR(1) perturbations of random particles, mixed
//! with a global exploration component.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::envs::ControlBounds;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlobalKind {
    /// Independent uniform draws inside the control bounds.
    UniformInBounds,
    /// AR(1) Gaussian sequence around the center of the bounds with per-step
    /// std `global_scale`.
    BroadGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    /// Probability of drawing from the global component.
    pub rho: f64,
    /// Per-step perturbation std, one entry per control dimension.
    pub local_sigma: Vec<f64>,
    /// AR(1) coefficient of the perturbations, in [0, 1).
    pub temporal_correlation: f64,
    pub global_kind: GlobalKind,
    /// Per-step std of the broad Gaussian, one entry per control dimension.
    pub global_scale: Vec<f64>,
}

impl ProposalConfig {
    pub fn validate(&self, control_dim: usize) -> Result<()> {
        let mut problems = Vec::new();
        if !(0.0..=1.0).contains(&self.rho) {
            problems.push(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !(0.0..1.0).contains(&self.temporal_correlation) {
            problems.push(format!(
                "temporal_correlation must lie in [0, 1), got {}",
                self.temporal_correlation
            ));
        }
        for (name, v) in [("local_sigma", &self.local_sigma), ("global_scale", &self.global_scale)] {
            if v.len() != control_dim {
                problems.push(format!("{name} needs {control_dim} entries, got {}", v.len()));
            }
            if v.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                problems.push(format!("{name} entries must be finite and > 0"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Fills `out` (horizon × dim, row-major) with an AR(1) sequence whose
/// stationary std per dimension is `sigma`.
fn ar1_noise<R: Rng + ?Sized>(rng: &mut R, sigma: &[f64], a: f64, out: &mut [f64]) {
    let m = sigma.len();
    let innovation = (1.0 - a * a).sqrt();
    for t in 0..out.len() / m {
        for d in 0..m {
            let xi: f64 = rng.sample(StandardNormal);
            out[t * m + d] = if t == 0 {
                sigma[d] * xi
            } else {
                a * out[(t - 1) * m + d] + innovation * sigma[d] * xi
            };
        }
    }
}

/// Draws one sequence from the global component.
pub fn sample_global<R: Rng + ?Sized>(
    cfg: &ProposalConfig,
    bounds: &ControlBounds,
    len: usize,
    rng: &mut R,
) -> Vec<f64> {
    let m = bounds.dim();
    let mut y = vec![0.0; len];
    match cfg.global_kind {
        GlobalKind::UniformInBounds => {
            for (k, v) in y.iter_mut().enumerate() {
                let (lo, hi) = (bounds.lower[k % m], bounds.upper[k % m]);
                *v = lo + (hi - lo) * rng.random::<f64>();
            }
        }
        GlobalKind::BroadGaussian => {
            ar1_noise(rng, &cfg.global_scale, cfg.temporal_correlation, &mut y);
            for (k, v) in y.iter_mut().enumerate() {
                *v += 0.5 * (bounds.lower[k % m] + bounds.upper[k % m]);
            }
        }
    }
    bounds.clamp_in_place(&mut y);
    y
}

/// Draws `count` proposals around `particles` (flat horizon × dim sequences).
///
/// Each draw consumes, in order: one uniform for the global/local choice, then
/// either the global sequence or one uniform for the particle index followed
/// by the perturbation. Outputs are clamped to `bounds`.
pub fn sample_proposals<R: Rng + ?Sized>(
    particles: &[Vec<f64>],
    cfg: &ProposalConfig,
    bounds: &ControlBounds,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let first = particles
        .first()
        .ok_or_else(|| Error::Domain("proposal sampling needs at least one particle".into()))?;
    let len = first.len();
    let m = bounds.dim();
    if len == 0 || len % m != 0 || particles.iter().any(|p| p.len() != len) {
        return Err(Error::dim("particle length", len.max(m), len));
    }
    cfg.validate(m)?;
    let n = particles.len();
    let mut out = Vec::with_capacity(count);
    let mut noise = vec![0.0; len];
    for _ in 0..count {
        let global = rng.random::<f64>() < cfg.rho;
        if global {
            out.push(sample_global(cfg, bounds, len, rng));
            continue;
        }
        let idx = ((rng.random::<f64>() * n as f64) as usize).min(n - 1);
        ar1_noise(rng, &cfg.local_sigma, cfg.temporal_correlation, &mut noise);
        let mut y: Vec<f64> = particles[idx].iter().zip(&noise).map(|(z, e)| z + e).collect();
        bounds.clamp_in_place(&mut y);
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(rho: f64, sigma: f64) -> ProposalConfig {
        ProposalConfig {
            rho,
            local_sigma: vec![sigma, sigma],
            temporal_correlation: 0.8,
            global_kind: GlobalKind::UniformInBounds,
            global_scale: vec![1.0, 1.0],
        }
    }

    #[test]
    fn global_only_ignores_particles() {
        let b = ControlBounds::symmetric(&[1.0, 1.0]);
        let far = vec![vec![100.0; 6]];
        let near = vec![vec![0.0; 6]];
        let a = sample_proposals(&far, &cfg(1.0, 0.1), &b, 20, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let c = sample_proposals(&near, &cfg(1.0, 0.1), &b, 20, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn vanishing_noise_returns_particles() {
        let b = ControlBounds::symmetric(&[10.0, 10.0]);
        let parts = vec![vec![1.0; 4], vec![-2.0; 4], vec![0.5; 4]];
        let ys = sample_proposals(&parts, &cfg(0.0, 1e-300), &b, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for y in ys {
            assert!(parts.iter().any(|p| p == &y));
        }
    }

    #[test]
    fn outputs_within_bounds() {
        let b = ControlBounds::symmetric(&[0.2, 0.1]);
        let parts = vec![vec![0.0; 20]];
        let ys = sample_proposals(&parts, &cfg(0.3, 5.0), &b, 100, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(ys.iter().all(|y| b.contains(y)));
    }

    #[test]
    fn bad_config_rejected() {
        let b = ControlBounds::symmetric(&[1.0, 1.0]);
        let mut c = cfg(1.5, 0.1);
        c.local_sigma = vec![0.1];
        let err = sample_proposals(&[vec![0.0; 2]], &c, &b, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rho") && msg.contains("local_sigma"), "{msg}");
    }
}

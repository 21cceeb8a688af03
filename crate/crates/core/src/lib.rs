//! Sampling-based optimal control with entropic optimal transport.
//!
//! The crate is organized bottom-up:
//!
//! - [`transport`]: dense entropic OT (cost matrices, Sinkhorn, the regularized objective)
//! - [`barycenter`]: closed-form particle updates for quadratic, circular, KL,
//!   SO(3) and SPD costs
//! - [`scd`]: Sinkhorn coordinate descent, alternating coupling solves and
//!   relaxed barycentric particle moves
//! - [`controllers`]: rollouts, Gibbs weights, MPPI / CEM baselines and the
//!   transport-based MPC controller
//! - [`envs`]: bicycle, double integrator and a bimodal obstacle toy
//! - [`bench`]: seeded Monte Carlo trials, summaries and paired comparisons
//!
//! The numeric core (`transport`, `barycenter`, `scd`) is generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix it to `f64`, which is
//! what the controllers and environments use.

pub mod barycenter;
pub mod bench;
pub mod controllers;
pub mod envs;
pub mod error;
pub mod family;
pub mod linalg;
pub mod scalar;
pub mod scd;
pub mod transport;

pub use error::{Error, Result};
pub use family::CostFamily;
pub use linalg::Matrix;
pub use scalar::Scalar;

pub type Simplex64 = transport::Simplex<f64>;
pub type CostMatrix64 = transport::CostMatrix<f64>;
pub type Coupling64 = transport::Coupling<f64>;
pub type SinkhornConfig64 = transport::SinkhornConfig<f64>;
pub type ParticleEnsemble64 = scd::ParticleEnsemble<f64>;
pub type ProposalBatch64 = scd::ProposalBatch<f64>;
pub type ScdConfig64 = scd::ScdConfig<f64>;

pub type Simplex32 = transport::Simplex<f32>;
pub type Coupling32 = transport::Coupling<f32>;
pub type ScdConfig32 = scd::ScdConfig<f32>;

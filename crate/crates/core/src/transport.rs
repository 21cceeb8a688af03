//! Dense entropic optimal transport.
//!
//! [`sinkhorn`] solves
//!
//! ```text
//! min_{Γ ∈ Γ(q, p)}  Σ_ij C_ij Γ_ij − ε H(Γ),    H(Γ) = −Σ_ij Γ_ij (ln Γ_ij − 1)
//! ```
//!
//! by alternating the scalings `u ← q / (K v)`, `v ← p / (Kᵀ u)` with
//! `K = exp(−C/ε)`. When the kernel underflows the same updates run on
//! log-scalings with log-sum-exp reductions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::CostFamily;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>", bound = "T: Scalar + Serialize + for<'a> Deserialize<'a>")]
pub struct Simplex<T: Scalar> {
    weights: Vec<T>,
}

fn simplex_tolerance<T: Scalar>(n: usize) -> T {
    T::lit(1e-9).max(T::from_usize_lossy(n.max(1)) * T::epsilon() * T::lit(4.0))
}

impl<T: Scalar> Simplex<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::NotSimplex("empty weight vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < T::zero())
        {
            return Err(Error::NotSimplex(format!("entry {i} is {w}")));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > simplex_tolerance(weights.len()) {
            return Err(Error::NotSimplex(format!("entries sum to {total}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NotSimplex("empty weight vector".into()));
        }
        Ok(Self {
            weights: vec![T::one() / T::from_usize_lossy(n); n],
        })
    }

    /// Divides nonnegative masses by their total.
    pub fn normalized(masses: &[T]) -> Result<Self> {
        let total: T = masses.iter().copied().sum();
        if !(total.is_finite() && total > T::zero()) || masses.iter().any(|&m| m < T::zero()) {
            return Err(Error::NotSimplex(format!(
                "cannot normalize masses with total {total}"
            )));
        }
        Ok(Self {
            weights: masses.iter().map(|&m| m / total).collect(),
        })
    }

    /// Max-shifted softmax of `scores`; `-inf` scores get zero weight.
    pub fn softmax(scores: &[T]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::NotSimplex("empty score vector".into()));
        }
        if scores.iter().any(|s| s.is_nan() || *s == T::infinity()) {
            return Err(Error::NotSimplex("scores must be finite or -inf".into()));
        }
        let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
        if !max.is_finite() {
            return Err(Error::NotSimplex("all scores are -inf".into()));
        }
        let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
        Self::normalized(&exps)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.weights
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for Simplex<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Simplex::new(v)
    }
}

impl<T: Scalar> From<Simplex<T>> for Vec<T> {
    fn from(s: Simplex<T>) -> Self {
        s.weights
    }
}

/// N×M matrix of finite pairwise costs; rows index particles, columns proposals.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T: Scalar>(Matrix<T>);

impl<T: Scalar> CostMatrix<T> {
    pub fn new(entries: Matrix<T>) -> Result<Self> {
        if entries.rows() == 0 || entries.cols() == 0 {
            return Err(Error::Domain("cost matrix must be non-empty".into()));
        }
        if let Some(x) = entries.as_slice().iter().find(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("cost matrix entry {x} is not finite")));
        }
        Ok(Self(entries))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn max(&self) -> T {
        self.0.as_slice().iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Median entry (lower median for an even count).
    pub fn median(&self) -> T {
        let mut v = self.0.as_slice().to_vec();
        let mid = (v.len() - 1) / 2;
        let (_, m, _) = v.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("finite"));
        *m
    }
}

/// Builds `C_ij = c(z_i, y_j)` for the chosen cost family.
pub fn build_cost_matrix<T: Scalar>(
    particles: &[Vec<T>],
    proposals: &[Vec<T>],
    family: &CostFamily<T>,
) -> Result<CostMatrix<T>> {
    if particles.is_empty() || proposals.is_empty() {
        return Err(Error::Domain("need at least one particle and one proposal".into()));
    }
    family.validate()?;
    let dim = particles[0].len();
    for p in particles.iter().chain(proposals) {
        if p.len() != dim {
            return Err(Error::dim("point dimension", dim, p.len()));
        }
    }
    let lz = particles
        .iter()
        .map(|z| family.lift(z))
        .collect::<Result<Vec<_>>>()?;
    let ly = proposals
        .iter()
        .map(|y| family.lift(y))
        .collect::<Result<Vec<_>>>()?;

    let m = proposals.len();
    let mut entries = Matrix::zeros(particles.len(), m);
    let work = particles.len() * m * dim.max(1);
    let fill_row = |(i, row): (usize, &mut [T])| {
        for (j, c) in row.iter_mut().enumerate() {
            *c = family.lifted_cost(&lz[i], &ly[j]);
        }
    };
    if work > 1 << 16 {
        entries
            .as_mut_slice()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(fill_row);
    } else {
        entries.as_mut_slice().chunks_mut(m).enumerate().for_each(fill_row);
    }
    CostMatrix::new(entries)
}

/// Dual scalings in log form: `Γ_ij = exp(log_u_i − C_ij/ε + log_v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalings<T> {
    pub log_u: Vec<T>,
    pub log_v: Vec<T>,
}

impl<T: Scalar> Scalings<T> {
    /// From strictly positive scaling vectors `(u, v)`.
    pub fn from_positive(u: &[T], v: &[T]) -> Result<Self> {
        if u.iter().chain(v).any(|&x| !(x.is_finite() && x > T::zero())) {
            return Err(Error::Config("warm-start scalings must be strictly positive".into()));
        }
        Ok(Self {
            log_u: u.iter().map(|x| x.ln()).collect(),
            log_v: v.iter().map(|x| x.ln()).collect(),
        })
    }

    pub fn u(&self) -> Vec<T> {
        self.log_u.iter().map(|x| x.exp()).collect()
    }

    pub fn v(&self) -> Vec<T> {
        self.log_v.iter().map(|x| x.exp()).collect()
    }
}

/// When the solver may switch to log-domain updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stabilization {
    /// Log-domain only when a kernel row or column maximum falls below 1e-300.
    #[default]
    Auto,
    /// Always iterate on log-scalings.
    Always,
    /// Never switch; kernel underflow is a solver failure.
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornConfig<T> {
    pub epsilon: T,
    /// Exit threshold on the L1 row-marginal error.
    pub tolerance: T,
    pub max_iterations: usize,
    pub warm_start: Option<Scalings<T>>,
    pub stabilization: Stabilization,
}

impl<T: Scalar> SinkhornConfig<T> {
    pub fn new(epsilon: T) -> Self {
        Self {
            epsilon,
            tolerance: T::lit(1e-6),
            max_iterations: 500,
            warm_start: None,
            stabilization: Stabilization::Auto,
        }
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_warm_start(mut self, scalings: Scalings<T>) -> Self {
        self.warm_start = Some(scalings);
        self
    }

    pub fn with_stabilization(mut self, stabilization: Stabilization) -> Self {
        self.stabilization = stabilization;
        self
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > T::zero()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > T::zero()) {
            return Err(Error::Config(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if let Some(w) = &self.warm_start {
            if w.log_u.len() != n {
                return Err(Error::dim("warm-start u", n, w.log_u.len()));
            }
            if w.log_v.len() != m {
                return Err(Error::dim("warm-start v", m, w.log_v.len()));
            }
            if w.log_u.iter().chain(&w.log_v).any(|x| x.is_nan() || *x == T::infinity()) {
                return Err(Error::Config("warm-start scalings must be strictly positive".into()));
            }
        }
        Ok(())
    }
}

/// Output of [`sinkhorn`].
#[derive(Debug, Clone)]
pub struct Coupling<T: Scalar> {
    plan: Matrix<T>,
    scalings: Scalings<T>,
    pub row_marginal_error: T,
    pub col_marginal_error: T,
    pub iterations_used: usize,
    /// Whether the row-marginal error dropped below the tolerance.
    pub converged: bool,
    /// Whether the log-domain iteration was used.
    pub log_domain: bool,
    pub epsilon: T,
}

impl<T: Scalar> Coupling<T> {
    #[inline]
    pub fn plan(&self) -> &Matrix<T> {
        &self.plan
    }

    #[inline]
    pub fn scalings(&self) -> &Scalings<T> {
        &self.scalings
    }

    pub fn shape(&self) -> (usize, usize) {
        self.plan.shape()
    }

    pub fn into_plan(self) -> Matrix<T> {
        self.plan
    }

    /// Rebuilds `diag(u) K diag(v)` from the stored scalings.
    pub fn reconstruct(&self, cost: &CostMatrix<T>) -> Matrix<T> {
        let c = cost.matrix();
        let eps = self.epsilon;
        Matrix::from_fn(c.rows(), c.cols(), |i, j| {
            (self.scalings.log_u[i] - c[(i, j)] / eps + self.scalings.log_v[j]).exp()
        })
    }
}

fn check_shapes<T: Scalar>(
    (n, m): (usize, usize),
    q: &Simplex<T>,
    p: &Simplex<T>,
) -> Result<()> {
    if q.len() != n {
        return Err(Error::dim("row marginal q", n, q.len()));
    }
    if p.len() != m {
        return Err(Error::dim("column marginal p", m, p.len()));
    }
    Ok(())
}

/// `(‖Γ 1_M − q‖₁, ‖Γᵀ 1_N − p‖₁)`.
pub fn marginal_errors<T: Scalar>(plan: &Matrix<T>, q: &Simplex<T>, p: &Simplex<T>) -> Result<(T, T)> {
    check_shapes(plan.shape(), q, p)?;
    let row: T = plan
        .row_sums()
        .iter()
        .zip(q.as_slice())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    let col: T = plan
        .col_sums()
        .iter()
        .zip(p.as_slice())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok((row, col))
}

/// `Σ C_ij Γ_ij − ε H(Γ)`; zero entries contribute nothing to the entropy.
pub fn eot_objective<T: Scalar>(cost: &CostMatrix<T>, plan: &Matrix<T>, epsilon: T) -> Result<T> {
    if cost.shape() != plan.shape() {
        return Err(Error::dim(
            "coupling rows",
            cost.shape().0 * cost.shape().1,
            plan.rows() * plan.cols(),
        ));
    }
    let mut transport = T::zero();
    let mut neg_entropy = T::zero();
    for (&c, &g) in cost.matrix().as_slice().iter().zip(plan.as_slice()) {
        if g < T::zero() || !g.is_finite() {
            return Err(Error::Domain(format!("coupling entry {g} is not a nonnegative mass")));
        }
        transport += c * g;
        if g > T::zero() {
            neg_entropy += g * (g.ln() - T::one());
        }
    }
    if epsilon == T::zero() {
        return Ok(transport);
    }
    Ok(transport + epsilon * neg_entropy)
}

/// Smallest normal kernel entry we trust before switching to log-domain updates.
const KERNEL_FLOOR: f64 = 1e-300;

/// Entropic OT coupling by Sinkhorn scaling.
///
/// Exits once the L1 row-marginal error is below `cfg.tolerance` (columns are
/// exact after each `v` update). Hitting `max_iterations` is not an error:
/// the best-effort coupling comes back with `converged == false`.
pub fn sinkhorn<T: Scalar>(
    cost: &CostMatrix<T>,
    q: &Simplex<T>,
    p: &Simplex<T>,
    cfg: &SinkhornConfig<T>,
) -> Result<Coupling<T>> {
    let (n, m) = cost.shape();
    check_shapes((n, m), q, p)?;
    cfg.validate(n, m)?;
    let eps = cfg.epsilon;
    let c = cost.matrix();

    let kernel = Matrix::from_fn(n, m, |i, j| (-c[(i, j)] / eps).exp());
    let floor = T::lit(KERNEL_FLOOR).max(T::min_positive_value());
    let row_max_low = (0..n).any(|i| kernel.row(i).iter().copied().fold(T::zero(), T::max) < floor);
    let col_max_low = (0..m).any(|j| (0..n).map(|i| kernel[(i, j)]).fold(T::zero(), T::max) < floor);
    let underflow = row_max_low || col_max_low;

    let use_log = match cfg.stabilization {
        Stabilization::Always => true,
        Stabilization::Auto => underflow,
        Stabilization::Off => {
            if underflow {
                return Err(Error::SolverFailure {
                    epsilon: eps.to_f64_lossy(),
                    detail: "kernel exp(-C/epsilon) underflows on a whole row or column".into(),
                });
            }
            false
        }
    };

    if !use_log {
        match scaling_domain(&kernel, q, p, cfg) {
            Ok(out) => return finish(out, false, q, p, cfg),
            Err(e) if cfg.stabilization == Stabilization::Off => return Err(e),
            Err(_) => {}
        }
    }
    let out = log_domain(c, q, p, cfg)?;
    finish(out, true, q, p, cfg)
}

struct RawSolve<T> {
    plan: Matrix<T>,
    scalings: Scalings<T>,
    iterations: usize,
}

fn finish<T: Scalar>(
    raw: RawSolve<T>,
    log_domain: bool,
    q: &Simplex<T>,
    p: &Simplex<T>,
    cfg: &SinkhornConfig<T>,
) -> Result<Coupling<T>> {
    let (row, col) = marginal_errors(&raw.plan, q, p)?;
    Ok(Coupling {
        plan: raw.plan,
        scalings: raw.scalings,
        row_marginal_error: row,
        col_marginal_error: col,
        iterations_used: raw.iterations,
        converged: row < cfg.tolerance,
        log_domain,
        epsilon: cfg.epsilon,
    })
}

fn scaling_domain<T: Scalar>(
    kernel: &Matrix<T>,
    q: &Simplex<T>,
    p: &Simplex<T>,
    cfg: &SinkhornConfig<T>,
) -> Result<RawSolve<T>> {
    let (n, m) = kernel.shape();
    let eps = cfg.epsilon;
    let (mut u, mut v) = match &cfg.warm_start {
        Some(w) => (w.u(), w.v()),
        None => (vec![T::one(); n], vec![T::one(); m]),
    };
    if u.iter().chain(&v).any(|x| !(x.is_finite() && *x > T::zero())) {
        u = vec![T::one(); n];
        v = vec![T::one(); m];
    }
    let qs = q.as_slice();
    let ps = p.as_slice();
    let mut kv = vec![T::zero(); n];
    let mut ktu = vec![T::zero(); m];
    let mut iterations = 0;

    let fail = |what: &str| Error::SolverFailure {
        epsilon: eps.to_f64_lossy(),
        detail: format!("non-finite {what} scaling"),
    };

    while iterations < cfg.max_iterations {
        iterations += 1;
        matvec(kernel, &v, &mut kv);
        for i in 0..n {
            u[i] = qs[i] / kv[i];
        }
        matvec_t(kernel, &u, &mut ktu);
        for j in 0..m {
            v[j] = ps[j] / ktu[j];
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(fail("row"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(fail("column"));
        }
        matvec(kernel, &v, &mut kv);
        let err: T = (0..n).map(|i| (u[i] * kv[i] - qs[i]).abs()).sum();
        if err < cfg.tolerance {
            break;
        }
    }

    let plan = Matrix::from_fn(n, m, |i, j| u[i] * kernel[(i, j)] * v[j]);
    Ok(RawSolve {
        plan,
        scalings: Scalings {
            log_u: u.iter().map(|x| x.ln()).collect(),
            log_v: v.iter().map(|x| x.ln()).collect(),
        },
        iterations,
    })
}

fn matvec<T: Scalar>(k: &Matrix<T>, v: &[T], out: &mut [T]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = k.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum();
    }
}

fn matvec_t<T: Scalar>(k: &Matrix<T>, u: &[T], out: &mut [T]) {
    out.iter_mut().for_each(|o| *o = T::zero());
    for (i, &ui) in u.iter().enumerate() {
        for (o, &kij) in out.iter_mut().zip(k.row(i)) {
            *o += ui * kij;
        }
    }
}

fn log_sum_exp<T: Scalar>(values: impl Iterator<Item = T> + Clone) -> T {
    let max = values.clone().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|x| (x - max).exp()).sum::<T>().ln()
}

fn log_domain<T: Scalar>(
    c: &Matrix<T>,
    q: &Simplex<T>,
    p: &Simplex<T>,
    cfg: &SinkhornConfig<T>,
) -> Result<RawSolve<T>> {
    let (n, m) = c.shape();
    let eps = cfg.epsilon;
    let log_k = Matrix::from_fn(n, m, |i, j| -c[(i, j)] / eps);
    let log_q: Vec<T> = q.as_slice().iter().map(|x| x.ln()).collect();
    let log_p: Vec<T> = p.as_slice().iter().map(|x| x.ln()).collect();
    let (mut lu, mut lv) = match &cfg.warm_start {
        Some(w) => (w.log_u.clone(), w.log_v.clone()),
        None => (vec![T::zero(); n], vec![T::zero(); m]),
    };
    if lu.iter().chain(&lv).any(|x| !x.is_finite()) {
        lu = vec![T::zero(); n];
        lv = vec![T::zero(); m];
    }
    let qs = q.as_slice();
    let mut iterations = 0;
    let row_lse = |lv: &[T], i: usize| log_sum_exp(log_k.row(i).iter().zip(lv).map(|(&a, &b)| a + b));

    while iterations < cfg.max_iterations {
        iterations += 1;
        for i in 0..n {
            lu[i] = log_q[i] - row_lse(&lv, i);
        }
        for j in 0..m {
            let lse = log_sum_exp((0..n).map(|i| log_k[(i, j)] + lu[i]));
            lv[j] = log_p[j] - lse;
        }
        if lu.iter().chain(&lv).any(|x| x.is_nan() || *x == T::infinity()) {
            return Err(Error::SolverFailure {
                epsilon: eps.to_f64_lossy(),
                detail: "non-finite log-domain potentials".into(),
            });
        }
        let err: T = (0..n)
            .map(|i| ((lu[i] + row_lse(&lv, i)).exp() - qs[i]).abs())
            .sum();
        if err < cfg.tolerance {
            break;
        }
    }

    let plan = Matrix::from_fn(n, m, |i, j| (lu[i] + log_k[(i, j)] + lv[j]).exp());
    Ok(RawSolve {
        plan,
        scalings: Scalings { log_u: lu, log_v: lv },
        iterations,
    })
}

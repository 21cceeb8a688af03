//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the crate's numeric code; each routine is a
//! direct, unoptimized transcription of the defining formula.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use otmpc::{CostFamily, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random point of the open simplex with entries bounded away from zero.
pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

pub fn random_matrix(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect()
}

fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let hi = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    // Neumaier-compensated sum of the shifted exponentials
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let v = (x - hi).exp();
        let t = s + v;
        c += if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
        s = t;
    }
    hi + (s + c).ln()
}

/// Dual potentials `(f, g)` and plan of the entropic problem, from log-domain
/// fixed-point iterations on the potentials.
pub struct DualSolution {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub plan: Vec<Vec<f64>>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn dual_sinkhorn(c: &[Vec<f64>], q: &[f64], p: &[f64], eps: f64, max_iter: usize, stop: f64) -> DualSolution {
    let (n, m) = (q.len(), p.len());
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        for j in 0..m {
            g[j] = eps * p[j].ln() - eps * logsumexp((0..n).map(|i| (f[i] - c[i][j]) / eps));
        }
        for i in 0..n {
            f[i] = eps * q[i].ln() - eps * logsumexp((0..m).map(|j| (g[j] - c[i][j]) / eps));
        }
        // after the f update rows are exact; check the columns
        let err: f64 = (0..m)
            .map(|j| {
                let s: f64 = (0..n).map(|i| ((f[i] + g[j] - c[i][j]) / eps).exp()).sum();
                (s - p[j]).abs()
            })
            .sum();
        if err < stop {
            break;
        }
    }
    let mut plan = vec![vec![0.0; m]; n];
    let mut objective = 0.0;
    for i in 0..n {
        for j in 0..m {
            let lg = (f[i] + g[j] - c[i][j]) / eps;
            let gij = lg.exp();
            plan[i][j] = gij;
            objective += c[i][j] * gij + eps * gij * (lg - 1.0);
        }
    }
    DualSolution {
        f,
        g,
        plan,
        objective,
        iterations,
    }
}

/// `Σ C Γ + ε Σ_{Γ>0} Γ (ln Γ − 1)` by double loop.
pub fn eot_objective_oracle(c: &[Vec<f64>], plan: &[Vec<f64>], eps: f64) -> f64 {
    let mut total = 0.0;
    for (ci, pi) in c.iter().zip(plan) {
        for (&cij, &g) in ci.iter().zip(pi) {
            total += cij * g;
            if g > 0.0 {
                total += eps * g * (g.ln() - 1.0);
            }
        }
    }
    total
}

/// `½‖z − y‖²` by double loop.
pub fn quadratic_cost_oracle(z: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
    z.iter()
        .map(|zi| {
            y.iter()
                .map(|yj| 0.5 * zi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Minimizer of `z ↦ Σ_j ½ Γ_ij ‖z − y_j‖²` by plain gradient descent.
pub fn gradient_descent_barycenter(row: &[f64], y: &[Vec<f64>], step: f64, iterations: usize) -> Vec<f64> {
    let d = y[0].len();
    let mut z = vec![0.0; d];
    let mut grad = vec![0.0; d];
    for _ in 0..iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (w, yj) in row.iter().zip(y) {
            for k in 0..d {
                grad[k] += w * (z[k] - yj[k]);
            }
        }
        for k in 0..d {
            z[k] -= step * grad[k];
        }
    }
    z
}

pub fn to_dmatrix(n: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, row_major)
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Symmetric matrix logarithm via nalgebra's eigensolver.
pub fn sym_log(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f64::ln));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

pub fn sym_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f64::exp));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Random SPD matrix `A Aᵀ + n I` scaled into a moderate spectrum.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    (&a * a.transpose() + DMatrix::identity(n, n) * 0.5) * 0.8
}

/// Rotation from an axis-angle pair by the Rodrigues formula.
pub fn rotation(axis: [f64; 3], angle: f64) -> DMatrix<f64> {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let (x, y, z) = (axis[0] / n, axis[1] / n, axis[2] / n);
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0]);
    DMatrix::identity(3, 3) + &k * angle.sin() + &k * &k * (1.0 - angle.cos())
}

pub fn random_rotation(rng: &mut impl Rng, max_angle: f64) -> DMatrix<f64> {
    let axis = [
        rng.random::<f64>() * 2.0 - 1.0,
        rng.random::<f64>() * 2.0 - 1.0,
        rng.random::<f64>() * 2.0 - 1.0 + 1e-3,
    ];
    rotation(axis, rng.random::<f64>() * max_angle)
}

/// Rotation log by the inverse Rodrigues formula, away from angle π.
pub fn rotation_log(r: &DMatrix<f64>) -> DMatrix<f64> {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let skew = (r - r.transpose()) * 0.5;
    if theta < 1e-12 {
        return skew;
    }
    skew * (theta / theta.sin())
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Weighted softmax `exp(−β (S_j − min S)) / Σ`.
pub fn softmax_oracle(costs: &[f64], beta: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = costs.iter().map(|s| (-beta * (s - min)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|x| x / z).collect()
}

pub fn random_weights(rng: &mut impl Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| random_simplex(rng, m)).collect()
}

/// `f(z*) − Σ_j w_j g(y_j)` in Frobenius / Euclidean norm, computed with
/// independent primitives.
pub fn first_order_residual(fam: &CostFamily<f64>, w: &[f64], y: &[Vec<f64>], z: &[f64]) -> f64 {
    let lin = |f: &dyn Fn(&[f64]) -> Vec<f64>| -> f64 {
        let fz = f(z);
        let mut acc = vec![0.0; fz.len()];
        for (wj, yj) in w.iter().zip(y) {
            for (a, v) in acc.iter_mut().zip(f(yj)) {
                *a += wj * v;
            }
        }
        fz.iter().zip(&acc).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    match fam {
        CostFamily::Quadratic | CostFamily::WeightedQuadratic { .. } => lin(&|v: &[f64]| v.to_vec()),
        CostFamily::RegularizedQuadratic { lambda } => {
            let mean: Vec<f64> = (0..z.len()).map(|d| w.iter().zip(y).map(|(wj, yj)| wj * yj[d]).sum()).collect();
            z.iter()
                .zip(&mean)
                .map(|(a, m)| ((1.0 + lambda) * a - m).powi(2))
                .sum::<f64>()
                .sqrt()
        }
        // stationarity of Σ_j w_j 2(1 − cos(z − y_j))
        CostFamily::Circular => (0..z.len())
            .map(|d| w.iter().zip(y).map(|(wj, yj)| wj * (z[d] - yj[d]).sin()).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt(),
        CostFamily::KullbackLeibler => lin(&|v: &[f64]| v.iter().map(|x| x.ln()).collect()),
        CostFamily::LogEuclideanSo3 => {
            lin(&|v: &[f64]| from_dmatrix(&rotation_log(&to_dmatrix(3, v))))
        }
        CostFamily::LogEuclideanSpd { n } => {
            lin(&|v: &[f64]| from_dmatrix(&sym_log(&to_dmatrix(*n, v))))
        }
    }
}

pub fn random_points(fam: &CostFamily<f64>, rng: &mut impl Rng, m: usize) -> Vec<Vec<f64>> {
    match fam {
        CostFamily::Quadratic | CostFamily::RegularizedQuadratic { .. } => (0..m)
            .map(|_| (0..3).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect())
            .collect(),
        CostFamily::WeightedQuadratic { weight } => (0..m)
            .map(|_| (0..weight.rows()).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect())
            .collect(),
        // angles clustered so the resultant stays away from zero
        CostFamily::Circular => (0..m)
            .map(|_| (0..2).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect(),
        CostFamily::KullbackLeibler => (0..m)
            .map(|_| (0..4).map(|_| 0.01 + rng.random::<f64>() * 5.0).collect())
            .collect(),
        CostFamily::LogEuclideanSo3 => (0..m)
            .map(|_| from_dmatrix(&random_rotation(rng, 1.0)))
            .collect(),
        CostFamily::LogEuclideanSpd { n } => (0..m)
            .map(|_| from_dmatrix(&random_spd(rng, *n)))
            .collect(),
    }
}

pub fn all_families() -> Vec<CostFamily<f64>> {
    vec![
        CostFamily::Quadratic,
        CostFamily::WeightedQuadratic {
            weight: Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap(),
        },
        CostFamily::RegularizedQuadratic { lambda: 0.7 },
        CostFamily::Circular,
        CostFamily::KullbackLeibler,
        CostFamily::LogEuclideanSo3,
        CostFamily::LogEuclideanSpd { n: 3 },
    ]
}

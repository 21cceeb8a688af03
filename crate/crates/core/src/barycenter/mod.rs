//! Closed-form particle updates.
//!
//! For a cost whose gradient splits as `∂_z c(z, y) = f(z) − g(y)` with `f`
//! invertible, the minimizer of `z ↦ Σ_j w_j c(z, y_j)` is
//! `z* = f⁻¹(Σ_j w_j g(y_j))`. [`generalized_update`] applies that map for every
//! [`CostFamily`]; [`barycentric_update`] is the quadratic case driven directly
//! by a coupling.

pub mod so3;
pub mod spd;

use crate::error::{Error, Result};
use crate::family::CostFamily;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub use so3::{exp_so3, log_so3, Rotation3};
pub use spd::{exp_sym, log_spd, SpdMatrix};

/// Rows with less total coupling mass than this are degenerate.
pub const MIN_ROW_MASS: f64 = 1e-15;

/// Row-normalized coupling, `w_ij = Γ_ij / Σ_k Γ_ik`. Every row is a simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycentricWeights<T: Scalar> {
    weights: Matrix<T>,
}

impl<T: Scalar> BarycentricWeights<T> {
    /// Normalizes each row of a coupling plan.
    pub fn from_plan(plan: &Matrix<T>) -> Result<Self> {
        let mut weights = plan.clone();
        for i in 0..plan.rows() {
            let row = weights.row_mut(i);
            if row.iter().any(|&x| x < T::zero() || !x.is_finite()) {
                return Err(Error::Domain(format!("coupling row {i} has a negative or non-finite entry")));
            }
            let mass: T = row.iter().copied().sum();
            if !(mass >= T::lit(MIN_ROW_MASS)) {
                return Err(Error::DegenerateCoupling {
                    row: i,
                    mass: mass.to_f64_lossy(),
                });
            }
            row.iter_mut().for_each(|x| *x /= mass);
        }
        Ok(Self { weights })
    }

    /// Uses rows that are already simplices.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let weights = Matrix::from_rows(rows)?;
        for (i, r) in rows.iter().enumerate() {
            crate::transport::Simplex::new(r.clone())
                .map_err(|e| Error::NotSimplex(format!("weight row {i}: {e}")))?;
        }
        Ok(Self { weights })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.weights.row(i)
    }

    pub fn num_rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn num_cols(&self) -> usize {
        self.weights.cols()
    }

    /// Index of the single nonzero weight in row `i`, if there is exactly one.
    pub fn one_hot(&self, i: usize) -> Option<usize> {
        let mut hit = None;
        for (j, &w) in self.row(i).iter().enumerate() {
            if w != T::zero() {
                if hit.is_some() {
                    return None;
                }
                hit = Some(j);
            }
        }
        hit
    }
}

/// Quadratic barycentric projection `z*_i = Σ_j Γ_ij y_j / Σ_k Γ_ik`.
///
/// Outputs are clamped to the per-coordinate range of the proposals, which
/// only absorbs rounding: the exact projection is a convex combination.
pub fn barycentric_update<T: Scalar>(plan: &Matrix<T>, proposals: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let weights = BarycentricWeights::from_plan(plan)?;
    generalized_update(&weights, proposals, &CostFamily::Quadratic)
}

/// `z*_i = f⁻¹(Σ_j w_ij g(y_j))` for the given family.
pub fn generalized_update<T: Scalar>(
    weights: &BarycentricWeights<T>,
    proposals: &[Vec<T>],
    family: &CostFamily<T>,
) -> Result<Vec<Vec<T>>> {
    if proposals.is_empty() {
        return Err(Error::Domain("no proposals".into()));
    }
    if weights.num_cols() != proposals.len() {
        return Err(Error::dim("weight columns vs proposals", proposals.len(), weights.num_cols()));
    }
    family.validate()?;
    let dim = proposals[0].len();
    for y in proposals {
        if y.len() != dim {
            return Err(Error::dim("proposal dimension", dim, y.len()));
        }
    }

    match family {
        CostFamily::Quadratic | CostFamily::WeightedQuadratic { .. } => {
            for y in proposals {
                family.validate_point(y)?;
            }
            let (lo, hi) = coordinate_range(proposals);
            Ok((0..weights.num_rows())
                .map(|i| match weights.one_hot(i) {
                    Some(j) => proposals[j].clone(),
                    None => {
                        let mut z = weighted_sum(weights.row(i), proposals, dim);
                        for d in 0..dim {
                            z[d] = z[d].max(lo[d]).min(hi[d]);
                        }
                        z
                    }
                })
                .collect())
        }
        CostFamily::RegularizedQuadratic { lambda } => {
            for y in proposals {
                family.validate_point(y)?;
            }
            let shrink = T::one() / (T::one() + *lambda);
            Ok((0..weights.num_rows())
                .map(|i| {
                    let z = match weights.one_hot(i) {
                        Some(j) => proposals[j].clone(),
                        None => weighted_sum(weights.row(i), proposals, dim),
                    };
                    if *lambda == T::zero() {
                        z
                    } else {
                        z.into_iter().map(|x| x * shrink).collect()
                    }
                })
                .collect())
        }
        CostFamily::Circular => {
            for y in proposals {
                family.validate_point(y)?;
            }
            (0..weights.num_rows())
                .map(|i| {
                    if let Some(j) = weights.one_hot(i) {
                        return Ok(proposals[j].clone());
                    }
                    let w = weights.row(i);
                    (0..dim)
                        .map(|d| {
                            let (mut s, mut c) = (T::zero(), T::zero());
                            for (wj, y) in w.iter().zip(proposals) {
                                s += *wj * y[d].sin();
                                c += *wj * y[d].cos();
                            }
                            let resultant = (s * s + c * c).sqrt();
                            if resultant < T::lit(1e-12) {
                                return Err(Error::UndefinedMean {
                                    row: i,
                                    resultant: resultant.to_f64_lossy(),
                                });
                            }
                            Ok(s.atan2(c))
                        })
                        .collect()
                })
                .collect()
        }
        CostFamily::KullbackLeibler => {
            for y in proposals {
                family.validate_point(y)?;
            }
            let logs: Vec<Vec<T>> = proposals
                .iter()
                .map(|y| y.iter().map(|x| x.ln()).collect())
                .collect();
            Ok((0..weights.num_rows())
                .map(|i| match weights.one_hot(i) {
                    Some(j) => proposals[j].clone(),
                    None => weighted_sum(weights.row(i), &logs, dim)
                        .into_iter()
                        .map(|x| x.exp())
                        .collect(),
                })
                .collect())
        }
        CostFamily::LogEuclideanSo3 => {
            let logs = proposals
                .iter()
                .map(|y| family.lift(y))
                .collect::<Result<Vec<_>>>()?;
            Ok((0..weights.num_rows())
                .map(|i| match weights.one_hot(i) {
                    Some(j) => proposals[j].clone(),
                    None => {
                        let l = Matrix::from_row_major(3, 3, weighted_sum(weights.row(i), &logs, 9))
                            .expect("3x3");
                        exp_so3(&l).into_vec()
                    }
                })
                .collect())
        }
        CostFamily::LogEuclideanSpd { n } => {
            let logs = proposals
                .iter()
                .map(|y| family.lift(y))
                .collect::<Result<Vec<_>>>()?;
            (0..weights.num_rows())
                .map(|i| match weights.one_hot(i) {
                    Some(j) => Ok(proposals[j].clone()),
                    None => {
                        let l = Matrix::from_row_major(*n, *n, weighted_sum(weights.row(i), &logs, n * n))?;
                        Ok(exp_sym(&l)?.into_matrix().into_vec())
                    }
                })
                .collect()
        }
    }
}

/// Relaxed step `f⁻¹((1 − η) f(from) + η f(to))` in the family's geometry.
/// For the quadratic families this is `(1 − η) from + η to`.
pub fn interpolate<T: Scalar>(family: &CostFamily<T>, from: &[T], to: &[T], eta: T) -> Result<Vec<T>> {
    if eta == T::one() {
        return Ok(to.to_vec());
    }
    if from.len() != to.len() {
        return Err(Error::dim("interpolation endpoints", from.len(), to.len()));
    }
    let geometry = match family {
        CostFamily::RegularizedQuadratic { .. } | CostFamily::WeightedQuadratic { .. } => {
            CostFamily::Quadratic
        }
        other => other.clone(),
    };
    if geometry.is_linear() {
        return Ok(from
            .iter()
            .zip(to)
            .map(|(&a, &b)| (T::one() - eta) * a + eta * b)
            .collect());
    }
    let w = BarycentricWeights {
        weights: Matrix::from_row_major(1, 2, vec![T::one() - eta, eta])?,
    };
    let mut out = generalized_update(&w, &[from.to_vec(), to.to_vec()], &geometry)?;
    Ok(out.pop().expect("one row"))
}

fn weighted_sum<T: Scalar>(w: &[T], points: &[Vec<T>], dim: usize) -> Vec<T> {
    let mut z = vec![T::zero(); dim];
    for (&wj, y) in w.iter().zip(points) {
        if wj == T::zero() {
            continue;
        }
        for (zd, &yd) in z.iter_mut().zip(y) {
            *zd += wj * yd;
        }
    }
    z
}

fn coordinate_range<T: Scalar>(points: &[Vec<T>]) -> (Vec<T>, Vec<T>) {
    let dim = points[0].len();
    let mut lo = vec![T::infinity(); dim];
    let mut hi = vec![T::neg_infinity(); dim];
    for y in points {
        for d in 0..dim {
            lo[d] = lo[d].min(y[d]);
            hi[d] = hi[d].max(y[d]);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_PI_3};

    fn half_half() -> BarycentricWeights<f64> {
        BarycentricWeights::from_rows(&[vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn permutation_coupling_assigns_proposals() {
        let plan = Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        let ys = vec![vec![1.0, 2.0], vec![-3.0, 4.0]];
        let z = barycentric_update(&plan, &ys).unwrap();
        assert_eq!(z, vec![ys[1].clone(), ys[0].clone()]);
    }

    #[test]
    fn zero_row_is_degenerate() {
        let plan = Matrix::from_rows(&[vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap();
        let err = barycentric_update(&plan, &[vec![0.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::DegenerateCoupling { row: 1, .. }));
    }

    #[test]
    fn circular_symmetric_pair_averages_to_zero() {
        let ys = vec![vec![-FRAC_PI_3], vec![FRAC_PI_3]];
        let z = generalized_update(&half_half(), &ys, &CostFamily::Circular).unwrap();
        assert!(z[0][0].abs() < 1e-15);
    }

    #[test]
    fn circular_antipodal_is_undefined() {
        let ys = vec![vec![0.0], vec![std::f64::consts::PI]];
        let err = generalized_update(&half_half(), &ys, &CostFamily::Circular).unwrap_err();
        assert!(matches!(err, Error::UndefinedMean { row: 0, .. }));
    }

    #[test]
    fn kl_geometric_mean() {
        let z = generalized_update(&half_half(), &[vec![1.0], vec![4.0]], &CostFamily::KullbackLeibler)
            .unwrap();
        assert!((z[0][0] - 2.0).abs() < 1e-14);
        let err = generalized_update(&half_half(), &[vec![1.0], vec![-4.0]], &CostFamily::KullbackLeibler);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn spd_log_midpoint() {
        let ys = vec![
            Matrix::<f64>::identity(2).into_vec(),
            Matrix::diag(&[E * E, E * E]).into_vec(),
        ];
        let z = generalized_update(&half_half(), &ys, &CostFamily::LogEuclideanSpd { n: 2 }).unwrap();
        let expected = [E, 0.0, 0.0, E];
        for (a, b) in z[0].iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn weighted_quadratic_weight_cancels() {
        let w = Matrix::diag(&[2.0, 1.0]);
        let weights = BarycentricWeights::from_rows(&[vec![0.25, 0.75]]).unwrap();
        let ys = vec![vec![1.0, 0.0], vec![3.0, 4.0]];
        let a = generalized_update(&weights, &ys, &CostFamily::WeightedQuadratic { weight: w }).unwrap();
        let b = generalized_update(&weights, &ys, &CostFamily::Quadratic).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], vec![2.5, 3.0]);
    }

    #[test]
    fn regularized_shrinks_toward_origin() {
        let weights = BarycentricWeights::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let z = generalized_update(
            &weights,
            &[vec![2.0], vec![4.0]],
            &CostFamily::RegularizedQuadratic { lambda: 1.0 },
        )
        .unwrap();
        assert!((z[0][0] - 1.5_f64).abs() < 1e-15);
    }

    #[test]
    fn interpolate_is_affine_for_quadratic() {
        let z = interpolate(&CostFamily::Quadratic, &[0.0, 2.0], &[4.0, 0.0], 0.25).unwrap();
        assert_eq!(z, vec![1.0, 1.5]);
    }

    #[test]
    fn one_hot_rows_detected() {
        let w = BarycentricWeights::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(w.one_hot(0), Some(1));
        assert_eq!(w.one_hot(1), None);
    }
}

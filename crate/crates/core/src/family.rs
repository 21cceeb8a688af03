//! Transport cost families. Each family pairs a cost `c(z, y)` with a closed-form
//! minimizer of `z ↦ Σ_j w_j c(z, y_j)` (see [`crate::barycenter`]).
//!
//! Points are flat slices. Matrix-valued families (SO(3), SPD) store their
//! matrices row-major.

use crate::barycenter::{so3, spd};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum CostFamily<T> {
    /// `½‖z − y‖²`, the cost the particle update was derived for.
    Quadratic,
    /// `(z − y)ᵀ W (z − y)` with `W ≻ 0`.
    WeightedQuadratic { weight: Matrix<T> },
    /// `‖z − y‖² + λ‖z‖²`.
    RegularizedQuadratic { lambda: T },
    /// `Σ_d 2(1 − cos(z_d − y_d))` over a vector of angles.
    Circular,
    /// Generalized KL divergence `Σ_k z_k ln(z_k / y_k) − z_k + y_k` on positive vectors.
    KullbackLeibler,
    /// `‖log R − log S‖²_F` on 3×3 rotations.
    LogEuclideanSo3,
    /// `‖log P − log Q‖²_F` on n×n SPD matrices.
    LogEuclideanSpd { n: usize },
}

impl<T: Scalar> Default for CostFamily<T> {
    fn default() -> Self {
        CostFamily::Quadratic
    }
}

impl<T: Scalar> CostFamily<T> {
    pub fn name(&self) -> &'static str {
        match self {
            CostFamily::Quadratic => "quadratic",
            CostFamily::WeightedQuadratic { .. } => "weighted-quadratic",
            CostFamily::RegularizedQuadratic { .. } => "regularized-quadratic",
            CostFamily::Circular => "circular",
            CostFamily::KullbackLeibler => "kl",
            CostFamily::LogEuclideanSo3 => "log-euclidean-so3",
            CostFamily::LogEuclideanSpd { .. } => "log-euclidean-spd",
        }
    }

    /// Required point length, when the family fixes one.
    pub fn point_dim(&self) -> Option<usize> {
        match self {
            CostFamily::WeightedQuadratic { weight } => Some(weight.rows()),
            CostFamily::LogEuclideanSo3 => Some(9),
            CostFamily::LogEuclideanSpd { n } => Some(n * n),
            _ => None,
        }
    }

    /// Checks the family's own parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            CostFamily::WeightedQuadratic { weight } => {
                if !weight.is_square() {
                    return Err(Error::Domain("weight matrix must be square".into()));
                }
                if weight.asymmetry() > T::lit(1e-10) * (T::one() + weight.max_abs()) {
                    return Err(Error::Domain("weight matrix must be symmetric".into()));
                }
                let (vals, _) = symmetric_eigen(weight)?;
                if vals.iter().any(|&l| l <= T::zero()) {
                    return Err(Error::Domain("weight matrix must be positive definite".into()));
                }
                Ok(())
            }
            CostFamily::RegularizedQuadratic { lambda } => {
                if !(lambda.is_finite() && *lambda >= T::zero()) {
                    return Err(Error::Domain(format!("lambda must be >= 0, got {lambda}")));
                }
                Ok(())
            }
            CostFamily::LogEuclideanSpd { n } if *n == 0 => {
                Err(Error::Domain("SPD dimension must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Checks that `point` lies in the family's domain.
    pub fn validate_point(&self, point: &[T]) -> Result<()> {
        if let Some(d) = self.point_dim() {
            if point.len() != d {
                return Err(Error::dim("point for cost family", d, point.len()));
            }
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("point has non-finite entries".into()));
        }
        match self {
            CostFamily::KullbackLeibler => {
                if let Some(x) = point.iter().find(|&&x| x <= T::zero()) {
                    return Err(Error::Domain(format!(
                        "KL family requires positive entries, found {x}"
                    )));
                }
            }
            CostFamily::LogEuclideanSo3 => {
                so3::Rotation3::from_row_major(point)?;
            }
            CostFamily::LogEuclideanSpd { n } => {
                spd::SpdMatrix::new(Matrix::from_row_major(*n, *n, point.to_vec())?)?;
            }
            _ => {}
        }
        Ok(())
    }

    /// Maps a point to the space where its cost is evaluated: the matrix
    /// logarithm for the manifold families, the point itself otherwise.
    pub(crate) fn lift(&self, point: &[T]) -> Result<Vec<T>> {
        self.validate_point(point)?;
        match self {
            CostFamily::LogEuclideanSo3 => {
                let r = so3::Rotation3::from_row_major(point)?;
                Ok(so3::log_so3(&r)?.into_vec())
            }
            CostFamily::LogEuclideanSpd { n } => {
                let p = spd::SpdMatrix::new(Matrix::from_row_major(*n, *n, point.to_vec())?)?;
                Ok(spd::log_spd(&p)?.into_vec())
            }
            _ => Ok(point.to_vec()),
        }
    }

    /// Cost between two lifted points.
    pub(crate) fn lifted_cost(&self, z: &[T], y: &[T]) -> T {
        let half = T::lit(0.5);
        match self {
            CostFamily::Quadratic => {
                half * z.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>()
            }
            CostFamily::WeightedQuadratic { weight } => {
                let d = z.len();
                let mut acc = T::zero();
                for r in 0..d {
                    let dr = z[r] - y[r];
                    let row = weight.row(r);
                    let mut inner = T::zero();
                    for c in 0..d {
                        inner += row[c] * (z[c] - y[c]);
                    }
                    acc += dr * inner;
                }
                acc
            }
            CostFamily::RegularizedQuadratic { lambda } => {
                let sq: T = z.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
                let norm: T = z.iter().map(|&a| a * a).sum();
                sq + *lambda * norm
            }
            CostFamily::Circular => z
                .iter()
                .zip(y)
                .map(|(&a, &b)| T::lit(2.0) * (T::one() - (a - b).cos()))
                .sum(),
            CostFamily::KullbackLeibler => z
                .iter()
                .zip(y)
                .map(|(&a, &b)| a * (a / b).ln() - a + b)
                .sum(),
            CostFamily::LogEuclideanSo3 | CostFamily::LogEuclideanSpd { .. } => {
                z.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum()
            }
        }
    }

    /// `c(z, y)` for a single pair.
    pub fn cost(&self, z: &[T], y: &[T]) -> Result<T> {
        if z.len() != y.len() {
            return Err(Error::dim("cost pair", z.len(), y.len()));
        }
        let lz = self.lift(z)?;
        let ly = self.lift(y)?;
        Ok(self.lifted_cost(&lz, &ly))
    }

    /// Whether the barycenter is a linear weighted mean of the raw points.
    pub(crate) fn is_linear(&self) -> bool {
        matches!(
            self,
            CostFamily::Quadratic | CostFamily::WeightedQuadratic { .. }
        )
    }
}

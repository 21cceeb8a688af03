//! Rotation matrices and the SO(3) exponential / logarithm.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Angles at or beyond `π − BRANCH_MARGIN` have no unique logarithm.
pub const BRANCH_MARGIN: f64 = 1e-6;
const SMALL_ANGLE: f64 = 1e-4;

/// 3×3 rotation matrix: `RᵀR = I` and `det R = +1`, both within 1e-8.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation3<T: Scalar> {
    matrix: Matrix<T>,
}

fn orthogonality_tolerance<T: Scalar>() -> T {
    T::lit(1e-8).max(T::epsilon() * T::lit(64.0))
}

impl<T: Scalar> Rotation3<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if matrix.shape() != (3, 3) {
            return Err(Error::dim("rotation matrix size", 9, matrix.rows() * matrix.cols()));
        }
        let tol = orthogonality_tolerance::<T>();
        let rtr = matrix.transpose().matmul(&matrix)?;
        let dev = rtr.sub(&Matrix::identity(3)).frobenius_norm();
        if !(dev <= tol) {
            return Err(Error::Domain(format!("matrix is not orthogonal (|RᵀR − I| = {dev})")));
        }
        let det = det3(&matrix);
        if !((det - T::one()).abs() <= tol) {
            return Err(Error::Domain(format!("rotation determinant is {det}, expected +1")));
        }
        Ok(Self { matrix })
    }

    pub fn from_row_major(entries: &[T]) -> Result<Self> {
        Self::new(Matrix::from_row_major(3, 3, entries.to_vec())?)
    }

    /// Rotation by `angle` about the (normalized) `axis`.
    pub fn from_axis_angle(axis: [T; 3], angle: T) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(norm > T::zero()) {
            return Err(Error::Domain("rotation axis must be nonzero".into()));
        }
        let w = [axis[0] / norm * angle, axis[1] / norm * angle, axis[2] / norm * angle];
        Ok(Self {
            matrix: exp_so3(&hat(w)),
        })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> T {
        let w = vee_antisym(&self.matrix);
        let s = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let c = (trace(&self.matrix) - T::one()) * T::lit(0.5);
        s.atan2(c)
    }
}

fn trace<T: Scalar>(m: &Matrix<T>) -> T {
    m[(0, 0)] + m[(1, 1)] + m[(2, 2)]
}

fn det3<T: Scalar>(m: &Matrix<T>) -> T {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Axial vector of `(R − Rᵀ)/2`.
fn vee_antisym<T: Scalar>(m: &Matrix<T>) -> [T; 3] {
    let h = T::lit(0.5);
    [
        (m[(2, 1)] - m[(1, 2)]) * h,
        (m[(0, 2)] - m[(2, 0)]) * h,
        (m[(1, 0)] - m[(0, 1)]) * h,
    ]
}

/// Skew-symmetric matrix of `w`.
pub fn hat<T: Scalar>(w: [T; 3]) -> Matrix<T> {
    let z = T::zero();
    Matrix::from_row_major(3, 3, vec![z, -w[2], w[1], w[2], z, -w[0], -w[1], w[0], z])
        .expect("3x3")
}

/// Axial vector of a skew-symmetric matrix.
pub fn vee<T: Scalar>(m: &Matrix<T>) -> [T; 3] {
    vee_antisym(m)
}

/// Matrix logarithm of a rotation via the axis-angle formula, with a Taylor
/// expansion of `θ / sin θ` below 1e-4 rad.
pub fn log_so3<T: Scalar>(r: &Rotation3<T>) -> Result<Matrix<T>> {
    let m = r.matrix();
    let w = vee_antisym(m);
    let s = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let c = (trace(m) - T::one()) * T::lit(0.5);
    let theta = s.atan2(c);
    if theta >= T::PI() - T::lit(BRANCH_MARGIN) {
        return Err(Error::BranchAmbiguity {
            angle: theta.to_f64_lossy(),
        });
    }
    let factor = if theta < T::lit(SMALL_ANGLE) {
        let t2 = theta * theta;
        T::one() + t2 / T::lit(6.0) + T::lit(7.0) * t2 * t2 / T::lit(360.0)
    } else {
        theta / s
    };
    Ok(hat([w[0] * factor, w[1] * factor, w[2] * factor]))
}

/// Rodrigues exponential of a skew-symmetric matrix (the symmetric part is ignored).
pub fn exp_so3<T: Scalar>(omega: &Matrix<T>) -> Matrix<T> {
    let w = vee(omega);
    let t2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let theta = t2.sqrt();
    let (a, b) = if theta < T::lit(SMALL_ANGLE) {
        (
            T::one() - t2 / T::lit(6.0) + t2 * t2 / T::lit(120.0),
            T::lit(0.5) - t2 / T::lit(24.0) + t2 * t2 / T::lit(720.0),
        )
    } else {
        (theta.sin() / theta, (T::one() - theta.cos()) / t2)
    };
    let k = hat(w);
    let k2 = k.matmul(&k).expect("3x3");
    Matrix::from_fn(3, 3, |i, j| {
        let id = if i == j { T::one() } else { T::zero() };
        id + a * k[(i, j)] + b * k2[(i, j)]
    })
}

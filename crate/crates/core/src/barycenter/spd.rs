//! Symmetric positive definite matrices and their log / exp maps.

use crate::error::{Error, Result};
use crate::linalg::{spectral_apply, symmetric_eigen, Matrix};
use crate::scalar::Scalar;

/// Eigenvalues at or below this are treated as singular by [`log_spd`].
pub const SINGULAR_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix<T: Scalar> {
    matrix: Matrix<T>,
}

fn symmetry_tolerance<T: Scalar>(m: &Matrix<T>) -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(16.0)) * (T::one() + m.max_abs())
}

impl<T: Scalar> SpdMatrix<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(Error::Domain("SPD matrix must be square and non-empty".into()));
        }
        if matrix.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("SPD matrix has non-finite entries".into()));
        }
        let asym = matrix.asymmetry();
        if asym > symmetry_tolerance(&matrix) {
            return Err(Error::Domain(format!("matrix is not symmetric (asymmetry {asym})")));
        }
        let (vals, _) = symmetric_eigen(&matrix)?;
        let min = vals.iter().copied().fold(T::infinity(), T::min);
        if !(min > T::zero()) {
            return Err(Error::Domain(format!(
                "matrix is not positive definite (smallest eigenvalue {min})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn min_eigenvalue(&self) -> T {
        let (vals, _) = symmetric_eigen(&self.matrix).expect("square");
        vals.into_iter().fold(T::infinity(), T::min)
    }
}

/// Matrix logarithm through the eigendecomposition.
pub fn log_spd<T: Scalar>(p: &SpdMatrix<T>) -> Result<Matrix<T>> {
    let (vals, vecs) = symmetric_eigen(p.matrix())?;
    if let Some(&l) = vals.iter().find(|&&l| l <= T::lit(SINGULAR_EIGENVALUE)) {
        return Err(Error::NearSingular {
            eigenvalue: l.to_f64_lossy(),
        });
    }
    Ok(spectral_apply(&vals, &vecs, |l| l.ln()))
}

/// Matrix exponential of a symmetric matrix; the result is SPD.
pub fn exp_sym<T: Scalar>(s: &Matrix<T>) -> Result<SpdMatrix<T>> {
    if !s.is_square() {
        return Err(Error::Domain("matrix exponential needs a square matrix".into()));
    }
    let (vals, vecs) = symmetric_eigen(s)?;
    let out = spectral_apply(&vals, &vecs, |l| l.exp());
    SpdMatrix::new(out)
}

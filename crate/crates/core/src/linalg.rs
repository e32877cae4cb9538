//! Small dense/banded kernels used by the exact pipeline.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number (after Jacobi equilibration) above which an information
/// matrix is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Symmetric tridiagonal matrix with a constant off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl SymTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i.abs_diff(j) == 1 {
                self.off
            } else {
                0.0
            }
        })
    }

    pub fn shifted(&self, shift: f64) -> SymTridiagonal {
        SymTridiagonal {
            diag: self.diag.iter().map(|d| d + shift).collect(),
            off: self.off,
        }
    }

    /// `self * x` for every column of `x`.
    pub fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.len();
        assert_eq!(x.nrows(), n);
        let mut out = DMatrix::zeros(n, x.ncols());
        for c in 0..x.ncols() {
            for i in 0..n {
                let mut v = self.diag[i] * x[(i, c)];
                if i > 0 {
                    v += self.off * x[(i - 1, c)];
                }
                if i + 1 < n {
                    v += self.off * x[(i + 1, c)];
                }
                out[(i, c)] = v;
            }
        }
        out
    }

    /// Solve `self * out = rhs` in place by the Thomas algorithm. The matrix
    /// must be positive definite (no pivoting).
    pub fn solve_in_place(&self, rhs: &mut DMatrix<f64>) -> Result<()> {
        let n = self.len();
        assert_eq!(rhs.nrows(), n);
        let mut c_prime = vec![0.0; n];
        let mut pivots = vec![0.0; n];
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.off * c_prime[i - 1];
            }
            if !(pivot > 0.0) {
                return Err(Error::SingularCovariance { sensor: 0 });
            }
            pivots[i] = pivot;
            c_prime[i] = self.off / pivot;
        }
        for c in 0..rhs.ncols() {
            let mut col = rhs.column_mut(c);
            col[0] /= pivots[0];
            for i in 1..n {
                col[i] = (col[i] - self.off * col[i - 1]) / pivots[i];
            }
            for i in (0..n - 1).rev() {
                col[i] -= c_prime[i] * col[i + 1];
            }
        }
        Ok(())
    }
}

/// Inverse of a symmetric positive-definite matrix via Jacobi-equilibrated
/// Cholesky. Returns the inverse and the equilibrated condition number.
pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let d = a[(i, i)];
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::SingularFim {
                condition: f64::INFINITY,
            });
        }
        scale.push(d.sqrt().recip());
    }
    let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * scale[i] * scale[j]);
    let condition = condition_number(&scaled);
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::SingularFim { condition });
    }
    let chol = scaled.cholesky().ok_or(Error::SingularFim { condition })?;
    let inv = chol.inverse();
    let out = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * scale[i] * scale[j]);
    Ok((out, condition))
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when indefinite.
pub(crate) fn condition_number(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

//! Dense factorizations over [`Scalar`].
//!
//! Small systems only (Gram matrices, normal equations); no explicit inverses.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Array2<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: ArrayView2<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
        }
        let scale = a.diag().iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tol = T::epsilon() * T::of(n.max(1) as f64) * scale;
        let mut l = Array2::<T>::zeros((n, n));
        for j in 0..n {
            let mut d = a[[j, j]];
            for k in 0..j {
                d -= l[[j, k]] * l[[j, k]];
            }
            if !(d > tol) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[[j, j]] = djj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn solve(&self, b: ArrayView1<T>) -> Array1<T> {
        let n = self.lower.nrows();
        let l = &self.lower;
        let mut y = b.to_owned();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[[i, k]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * y[k];
            }
            y[i] = s / l[[i, i]];
        }
        y
    }

    pub fn lower(&self) -> &Array2<T> {
        &self.lower
    }
}

/// LU factorization with partial (row) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Array2<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: ArrayView2<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
        }
        let mut lu = a.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::Singular);
        }
        let tol = T::epsilon() * T::of(n.max(1) as f64) * scale;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[[i, k]].abs()))
                .fold((k, T::neg_infinity()), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > tol) {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
            }
            let pivot = lu[[k, k]];
            for i in (k + 1)..n {
                let f = lu[[i, k]] / pivot;
                lu[[i, k]] = f;
                if f != T::zero() {
                    for j in (k + 1)..n {
                        let u = lu[[k, j]];
                        lu[[i, j]] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: ArrayView1<T>) -> Array1<T> {
        let n = self.lu.nrows();
        let lu = &self.lu;
        let mut y: Array1<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= lu[[i, k]] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= lu[[i, k]] * y[k];
            }
            y[i] = s / lu[[i, i]];
        }
        y
    }
}

/// Adds `shift` to the diagonal of a square matrix in place.
pub(crate) fn add_diagonal<T: Scalar>(a: &mut Array2<T>, shift: T) {
    for i in 0..a.nrows().min(a.ncols()) {
        a[[i, i]] += shift;
    }
}

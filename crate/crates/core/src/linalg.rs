//! Dense symmetric linear algebra for training and compression, backed by
//! `faer`. Inputs and outputs are `ndarray` arrays.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{CvmError, Result};

fn to_faer(a: ArrayView2<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn to_ndarray(m: MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// `a·b`
pub fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<Array2<f64>> {
    if a.ncols() != b.nrows() {
        return Err(CvmError::Dimension {
            expected: a.ncols(),
            got: b.nrows(),
        });
    }
    let fa = to_faer(a);
    let same = a.as_ptr() == b.as_ptr() && a.shape() == b.shape() && a.strides() == b.strides();
    let p = if same { &fa * &fa } else { &fa * to_faer(b) };
    drop(fa);
    Ok(to_ndarray(p.as_ref()))
}

/// `aᵀ·a`, exactly symmetric.
pub fn gram(a: ArrayView2<f64>) -> Array2<f64> {
    let fa = to_faer(a);
    let g = fa.transpose() * &fa;
    drop(fa);
    let n = g.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| if i >= j { g[(i, j)] } else { g[(j, i)] })
}

/// Eigendecomposition `A = S·diag(D)·Sᵀ` of a symmetric matrix, eigenvalues
/// sorted in nonincreasing order. Column `k` of `vectors` pairs with
/// `values[k]`. Only the lower triangle of the input is read.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<f64>,
}

impl SymEigen {
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        Self::from_owned(a.clone())
    }

    /// Same as [`SymEigen::new`], releasing `a` before the decomposition
    /// allocates its workspace.
    pub fn from_owned(a: Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(CvmError::invalid("eigendecomposition needs a square matrix"));
        }
        if n == 0 {
            return Ok(SymEigen {
                values: Array1::zeros(0),
                vectors: Array2::zeros((0, 0)),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(CvmError::Numerical("eigendecomposition of a non-finite matrix".into()));
        }
        let fa = to_faer(a.view());
        drop(a);
        let e = fa
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| CvmError::Numerical(format!("eigendecomposition failed: {e:?}")))?;
        drop(fa);
        // faer returns ascending eigenvalues.
        let s = e.S().column_vector();
        let u = e.U();
        let values = Array1::from_iter((0..n).map(|k| s[n - 1 - k]));
        let vectors = Array2::from_shape_fn((n, n), |(i, k)| u[(i, n - 1 - k)]);
        Ok(SymEigen { values, vectors })
    }
}

/// Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug)]
pub struct Cholesky {
    llt: faer::linalg::solvers::Llt<f64>,
}

impl Cholesky {
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(CvmError::invalid("Cholesky needs a square matrix"));
        }
        Self::factor(to_faer(a.view()))
    }

    /// `buf` holds an `n×n` symmetric matrix in column-major order; only the
    /// lower triangle is read.
    pub fn from_col_major(n: usize, buf: Vec<f64>) -> Result<Self> {
        if buf.len() != n * n {
            return Err(CvmError::Dimension {
                expected: n * n,
                got: buf.len(),
            });
        }
        let m = Mat::from_fn(n, n, |i, j| buf[j * n + i]);
        drop(buf);
        Self::factor(m)
    }

    fn factor(m: Mat<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(CvmError::invalid("Cholesky of an empty matrix"));
        }
        let llt = m
            .llt(Side::Lower)
            .map_err(|_| CvmError::Numerical("matrix is not positive definite".into()))?;
        Ok(Cholesky { llt })
    }

    pub fn dim(&self) -> usize {
        self.llt.L().nrows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(CvmError::Dimension { expected: n, got: b.len() });
        }
        let mut x = Mat::from_fn(n, 1, |i, _| b[i]);
        self.llt.solve_in_place(x.as_mut());
        Ok((0..n).map(|i| x[(i, 0)]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eigen_reconstructs_and_sorts() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]];
        let e = SymEigen::new(&a).unwrap();
        assert!(e.values[0] >= e.values[1] && e.values[1] >= e.values[2]);
        let d = Array2::from_diag(&e.values);
        let rec = e.vectors.dot(&d).dot(&e.vectors.t());
        for (x, y) in rec.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let orth = e.vectors.t().dot(&e.vectors);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((orth[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_solves() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let c = Cholesky::new(&a).unwrap();
        let x = c.solve(&[2.0, 1.0]).unwrap();
        // 4x + 2y = 2, 2x + 3y = 1  →  x = 0.5, y = 0
        assert!((x[0] - 0.5).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(Cholesky::new(&a).is_err());
    }

    #[test]
    fn large_factorizations() {
        // Sizes past the blocked-algorithm thresholds.
        for n in [50usize, 129, 300] {
            let a = Array2::from_shape_fn((n, n), |(i, j)| {
                let d = i as f64 - j as f64;
                (-d * d / 10.0).exp() + if i == j { 0.5 } else { 0.0 }
            });
            let c = Cholesky::new(&a).unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = c.solve(&b).unwrap();
            let r = a.dot(&Array1::from(x));
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-10);
            }
            let e = SymEigen::new(&a).unwrap();
            assert!(e.values[n - 1] > 0.49);
        }
    }

    #[test]
    fn products() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(matmul(a.t(), a.view()).unwrap(), a.t().dot(&a));
        assert_eq!(gram(a.view()), a.t().dot(&a));
        assert!(matmul(a.view(), a.view()).is_err());
    }
}

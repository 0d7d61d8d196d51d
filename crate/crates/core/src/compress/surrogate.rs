use ndarray::{Array1, Array2, Axis};

use crate::error::{CvmError, Result};
use crate::kernel::gram_matrix;
use crate::linalg::{matmul, SymEigen};
use crate::svm::SvmModel;

/// Default relative eigenvalue floor: `ε = 1e-10 · max(D)`.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;

/// Least-squares surrogate `min_a ‖Ωa + β‖²` of the bias-frozen squared-hinge
/// retraining problem over a model's support vectors.
///
/// With `K` the support-vector kernel matrix, `K̂ = diag(y)·K` and the bias
/// `b` fixed,
///
/// ```text
/// ‖1 − K̂a − y·b‖² + aᵀKa = ‖Ωa + β‖² + const
/// ```
///
/// where `ΩᵀΩ = K̂ᵀK̂ + K = S·D·Sᵀ`, `Ω = √D·Sᵀ` and `β = −D^{-1/2}·Sᵀ·K̂ᵀ(1 − y·b)`.
#[derive(Debug, Clone)]
pub struct LarsProblem {
    pub omega: Array2<f64>,
    pub beta: Array1<f64>,
    /// `S`, eigenvectors as columns.
    pub eigvecs: Array2<f64>,
    /// `D` after flooring, nonincreasing.
    pub eigvals: Array1<f64>,
    pub fixed_bias: f64,
    /// Column `j` of `Ω` belongs to support vector `sv_index_map[j]`.
    pub sv_index_map: Vec<usize>,
}

impl LarsProblem {
    /// Wraps an explicit design; eigen fields describe `ΩᵀΩ`.
    pub fn from_design(omega: Array2<f64>, beta: Array1<f64>) -> Result<Self> {
        if omega.nrows() != beta.len() {
            return Err(CvmError::Dimension {
                expected: omega.nrows(),
                got: beta.len(),
            });
        }
        let gram = crate::linalg::gram(omega.view());
        let eig = SymEigen::new(&gram)?;
        let n = omega.ncols();
        Ok(LarsProblem {
            omega,
            beta,
            eigvecs: eig.vectors,
            eigvals: eig.values,
            fixed_bias: 0.0,
            sv_index_map: (0..n).collect(),
        })
    }

    /// Number of candidate columns.
    pub fn n_features(&self) -> usize {
        self.omega.ncols()
    }

    /// `‖Ωa + β‖²`
    pub fn objective(&self, a: &[f64]) -> f64 {
        let a = ndarray::ArrayView1::from(a);
        let r = self.omega.dot(&a) + &self.beta;
        r.dot(&r)
    }
}

/// Builds the surrogate for `model` given the ±1 target of each support
/// vector. `eig_floor` is relative to the largest eigenvalue.
pub fn build_surrogate(model: &SvmModel, labels: &[f64], eig_floor: f64) -> Result<LarsProblem> {
    let n = model.n_sv();
    if labels.len() != n {
        return Err(CvmError::Dimension { expected: n, got: labels.len() });
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(CvmError::invalid("support-vector labels must be ±1"));
    }
    if !(eig_floor > 0.0 && eig_floor < 1.0) {
        return Err(CvmError::invalid(format!("eigenvalue floor must be in (0, 1), got {eig_floor}")));
    }
    let k = gram_matrix(model.support_vectors().view(), model.kernel());
    let b = model.bias();
    // K̂ᵀK̂ = K·diag(y)²·K = K².
    let h = matmul(k.view(), k.view())? + &k;
    let h = symmetrize(h);
    // K̂ᵀ(1 − y·b) = K·(y − b)
    let yb = Array1::from_iter(labels.iter().map(|&y| y - b));
    let v = k.dot(&yb);
    drop(k);
    let trace: f64 = h.diag().sum();
    let eig = SymEigen::from_owned(h)?;
    let d_max = eig.values[0];
    let d_min = eig.values[n - 1];
    if d_min < -1e-6 * trace {
        return Err(CvmError::Numerical(format!(
            "K̂ᵀK̂ + K has eigenvalue {d_min:e}, expected PSD (trace {trace:e})"
        )));
    }
    if !(d_max > 0.0) {
        return Err(CvmError::Numerical("K̂ᵀK̂ + K is zero".into()));
    }
    let floor = eig_floor * d_max;
    let d = eig.values.mapv(|v| v.max(floor));
    let sqrt_d = d.mapv(f64::sqrt);

    // Ω = √D·Sᵀ
    let mut omega = eig.vectors.t().to_owned();
    for (mut row, &s) in omega.axis_iter_mut(Axis(0)).zip(sqrt_d.iter()) {
        row *= s;
    }
    let st_v = eig.vectors.t().dot(&v);
    let beta = Array1::from_iter(st_v.iter().zip(sqrt_d.iter()).map(|(x, s)| -x / s));

    Ok(LarsProblem {
        omega,
        beta,
        eigvecs: eig.vectors,
        eigvals: d,
        fixed_bias: b,
        sv_index_map: (0..n).collect(),
    })
}

fn symmetrize(mut m: Array2<f64>) -> Array2<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    m
}

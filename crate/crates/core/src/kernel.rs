//! RBF kernel values, kernel matrices and spatial gradients.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{CvmError, Result};

/// A kernel that can be evaluated and differentiated in its second argument.
///
/// Compression only ever needs these two operations, so any differentiable
/// kernel can be plugged into the gradient-support-vector optimizer.
/// Implementations may assume equal-length inputs; callers check.
pub trait Kernel: Send + Sync {
    fn eval(&self, x: &[f64], z: &[f64]) -> f64;

    /// Writes `∂K(x, z)/∂z` into `out` and returns `K(x, z)`.
    fn grad_z(&self, x: &[f64], z: &[f64], out: &mut [f64]) -> f64;

    /// Same as [`Kernel::grad_z`] when `K(x, z)` is already known.
    fn grad_z_with_value(&self, x: &[f64], z: &[f64], _value: f64, out: &mut [f64]) {
        self.grad_z(x, z, out);
    }
}

/// RBF kernel `K(x, z) = exp(−‖x − z‖² / (2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    sigma: f64,
    // Kept alongside σ so a gamma read from a model file is written back
    // bit-for-bit.
    gamma: f64,
}

impl KernelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CvmError::invalid(format!("sigma must be positive and finite, got {sigma}")));
        }
        Ok(KernelParams {
            sigma,
            gamma: 1.0 / (2.0 * sigma * sigma),
        })
    }

    /// From the LibSVM parameterization `exp(−gamma‖x − z‖²)`.
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(CvmError::invalid(format!("gamma must be positive and finite, got {gamma}")));
        }
        let sigma = 1.0 / (2.0 * gamma).sqrt();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(CvmError::invalid(format!("gamma {gamma} is out of range")));
        }
        Ok(KernelParams { sigma, gamma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `1 / (2σ²)`
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Kernel for KernelParams {
    #[inline]
    fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        (-sq_dist(x, z) * self.gamma).exp()
    }

    fn grad_z(&self, x: &[f64], z: &[f64], out: &mut [f64]) -> f64 {
        let k = self.eval(x, z);
        self.grad_z_with_value(x, z, k, out);
        k
    }

    #[inline]
    fn grad_z_with_value(&self, x: &[f64], z: &[f64], value: f64, out: &mut [f64]) {
        let scale = 2.0 * self.gamma * value;
        for ((o, a), b) in out.iter_mut().zip(x).zip(z) {
            *o = scale * (a - b);
        }
    }
}

fn check_dims(x: usize, z: usize) -> Result<()> {
    if x != z {
        return Err(CvmError::Dimension { expected: x, got: z });
    }
    Ok(())
}

pub fn rbf(x: &[f64], z: &[f64], p: &KernelParams) -> Result<f64> {
    check_dims(x.len(), z.len())?;
    Ok(p.eval(x, z))
}

/// `∂K(x, z)/∂z = K(x, z)·(x − z)/σ²`
pub fn rbf_grad_z(x: &[f64], z: &[f64], p: &KernelParams) -> Result<Vec<f64>> {
    check_dims(x.len(), z.len())?;
    let mut g = vec![0.0; x.len()];
    p.grad_z(x, z, &mut g);
    Ok(g)
}

/// `|X| × |Z|` matrix of kernel values between the rows of `x` and `z`.
pub fn kernel_matrix<K: Kernel>(x: ArrayView2<f64>, z: ArrayView2<f64>, kernel: &K) -> Result<Array2<f64>> {
    check_dims(x.ncols(), z.ncols())?;
    let x_rows: Vec<Vec<f64>> = x.axis_iter(Axis(0)).map(|r| r.to_vec()).collect();
    let z_rows: Vec<Vec<f64>> = z.axis_iter(Axis(0)).map(|r| r.to_vec()).collect();
    let values: Vec<f64> = x_rows
        .par_iter()
        .flat_map_iter(|xi| z_rows.iter().map(move |zj| kernel.eval(xi, zj)))
        .collect();
    Ok(Array2::from_shape_vec((x.nrows(), z.nrows()), values).expect("shape"))
}

/// Symmetric kernel matrix of the rows of `x` with itself.
pub fn gram_matrix<K: Kernel>(x: ArrayView2<f64>, kernel: &K) -> Array2<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = x.axis_iter(Axis(0)).map(|r| r.to_vec()).collect();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        out[[i, i]] = kernel.eval(&rows[i], &rows[i]);
        for j in 0..i {
            let v = kernel.eval(&rows[i], &rows[j]);
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymEigen;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(sigma: f64) -> KernelParams {
        KernelParams::new(sigma).unwrap()
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
        assert!(KernelParams::new(-1.0).is_err());
    }

    #[test]
    fn gamma_sigma_conversion() {
        assert_eq!(p(1.0).gamma(), 0.5);
        let k = KernelParams::from_gamma(0.5).unwrap();
        assert!((k.sigma() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn self_similarity_is_one() {
        assert_eq!(rbf(&[0.3, -2.0], &[0.3, -2.0], &p(0.7)).unwrap(), 1.0);
    }

    #[test]
    fn analytic_value() {
        let s = 1.7;
        let v = rbf(&[0.0, 0.0], &[s * 2f64.sqrt(), 0.0], &p(s)).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(rbf(&[0.0], &[0.0, 1.0], &p(1.0)).is_err());
        assert!(rbf_grad_z(&[0.0], &[0.0, 1.0], &p(1.0)).is_err());
        let x = Array2::<f64>::zeros((2, 3));
        let z = Array2::<f64>::zeros((2, 2));
        assert!(kernel_matrix(x.view(), z.view(), &p(1.0)).is_err());
    }

    #[test]
    fn gradient_analytic_cases() {
        assert_eq!(rbf_grad_z(&[1.0, 2.0], &[1.0, 2.0], &p(0.5)).unwrap(), vec![0.0, 0.0]);
        let g = rbf_grad_z(&[1.0, 0.0], &[0.0, 0.0], &p(1.0)).unwrap();
        assert!((g[0] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((g[0] - 0.60653).abs() < 1e-5);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn matrix_shape_and_symmetry() {
        let x = array![[0.0, 1.0], [2.0, -1.0]];
        let z = array![[0.0, 0.0], [1.0, 1.0], [3.0, 0.5]];
        let k = kernel_matrix(x.view(), z.view(), &p(1.0)).unwrap();
        assert_eq!(k.dim(), (2, 3));
        assert_eq!(k[[1, 2]], rbf(&[2.0, -1.0], &[3.0, 0.5], &p(1.0)).unwrap());
        let kk = kernel_matrix(z.view(), z.view(), &p(1.0)).unwrap();
        for i in 0..3 {
            assert_eq!(kk[[i, i]], 1.0);
            for j in 0..3 {
                assert!((kk[[i, j]] - kk[[j, i]]).abs() < 1e-12);
            }
        }
        assert_eq!(gram_matrix(z.view(), &p(1.0)), kk);
    }

    #[test]
    fn kernel_matrix_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [5usize, 30] {
            let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-2.0..2.0));
            let k = kernel_matrix(x.view(), x.view(), &p(0.8)).unwrap();
            let e = SymEigen::new(&k).unwrap();
            let min = e.values[n - 1];
            assert!(min >= -1e-10, "min eigenvalue {min}");
            assert!(min >= -1e-8 * n as f64);
        }
    }

    fn central_diff(x: &[f64], z: &[f64], k: &KernelParams, h: f64) -> Vec<f64> {
        (0..z.len())
            .map(|j| {
                let mut zp = z.to_vec();
                let mut zm = z.to_vec();
                zp[j] += h;
                zm[j] -= h;
                (k.eval(x, &zp) - k.eval(x, &zm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let d = rng.gen_range(1..5);
            let k = p(rng.gen_range(0.5..2.0));
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let g = rbf_grad_z(&x, &z, &k).unwrap();
            let fd = central_diff(&x, &z, &k, 1e-6);
            let scale = g.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-8);
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() / scale < 1e-5, "{a} vs {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn value_bounded_and_symmetric(
            x in prop::collection::vec(-5.0f64..5.0, 3),
            z in prop::collection::vec(-5.0f64..5.0, 3),
            sigma in 0.5f64..5.0,
        ) {
            let k = p(sigma);
            let a = rbf(&x, &z, &k).unwrap();
            let b = rbf(&z, &x, &k).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a > 0.0 && a <= 1.0);
            if x != z {
                prop_assert!(a < 1.0);
            }
        }
    }
}

use ndarray::{Array2, Axis};

use crate::error::{CvmError, Result};
use crate::kernel::{Kernel, KernelParams};

/// Real-valued decision function `f(x) = Σ_k coef_k·K(sv_k, x) + b`.
pub trait DecisionFunction {
    fn dim(&self) -> usize;

    /// Number of kernel evaluations per prediction.
    fn n_sv(&self) -> usize;

    fn decision_value(&self, x: &[f64]) -> Result<f64>;
}

/// Anything that maps a feature vector to a class label.
pub trait Classifier {
    fn dim(&self) -> usize;

    fn predict_label(&self, x: &[f64]) -> Result<i32>;

    /// Support vectors per binary sub-model, summed over sub-models.
    fn total_sv(&self) -> usize;
}

/// `f(x)` for either a trained or a compressed model.
pub fn predict_score<M: DecisionFunction + ?Sized>(model: &M, x: &[f64]) -> Result<f64> {
    model.decision_value(x)
}

/// Binary RBF SVM.
///
/// `coef` holds the signed dual weights: positive entries push towards the
/// positive class. `class_pair` is `(negative label, positive label)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    support_vectors: Array2<f64>,
    coef: Vec<f64>,
    bias: f64,
    kernel: KernelParams,
    c_param: Option<f64>,
    class_pair: (i32, i32),
}

impl SvmModel {
    pub fn new(
        support_vectors: Array2<f64>,
        coef: Vec<f64>,
        bias: f64,
        kernel: KernelParams,
        c_param: Option<f64>,
        class_pair: (i32, i32),
    ) -> Result<Self> {
        if coef.iter().any(|&c| c == 0.0) {
            return Err(CvmError::invalid("support vector with a zero coefficient"));
        }
        Self::new_allow_zero(support_vectors, coef, bias, kernel, c_param, class_pair)
    }

    /// Like [`SvmModel::new`] but keeps exact-zero coefficients, which a
    /// compressed model can legitimately carry.
    pub(crate) fn new_allow_zero(
        support_vectors: Array2<f64>,
        coef: Vec<f64>,
        bias: f64,
        kernel: KernelParams,
        c_param: Option<f64>,
        class_pair: (i32, i32),
    ) -> Result<Self> {
        if coef.is_empty() {
            return Err(CvmError::invalid("a model needs at least one support vector"));
        }
        if support_vectors.nrows() != coef.len() {
            return Err(CvmError::Dimension {
                expected: coef.len(),
                got: support_vectors.nrows(),
            });
        }
        if support_vectors.ncols() == 0 {
            return Err(CvmError::invalid("support vectors must have positive dimension"));
        }
        if !bias.is_finite() || coef.iter().chain(support_vectors.iter()).any(|v| !v.is_finite()) {
            return Err(CvmError::invalid("model contains non-finite values"));
        }
        if let Some(c) = c_param {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CvmError::invalid(format!("C must be positive, got {c}")));
            }
        }
        if class_pair.0 == class_pair.1 {
            return Err(CvmError::invalid("class pair must name two distinct labels"));
        }
        let support_vectors = support_vectors.as_standard_layout().into_owned();
        Ok(SvmModel {
            support_vectors,
            coef,
            bias,
            kernel,
            c_param,
            class_pair,
        })
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn n_sv(&self) -> usize {
        self.coef.len()
    }

    pub fn support_vectors(&self) -> &Array2<f64> {
        &self.support_vectors
    }

    pub fn support_vector(&self, k: usize) -> &[f64] {
        self.support_vectors
            .row(k)
            .to_slice()
            .expect("standard layout")
    }

    pub fn coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn c_param(&self) -> Option<f64> {
        self.c_param
    }

    pub fn class_pair(&self) -> (i32, i32) {
        self.class_pair
    }

    /// ±1 target of each support vector, read off the coefficient sign.
    pub fn sv_signs(&self) -> Vec<f64> {
        self.coef
            .iter()
            .map(|&c| if c >= 0.0 { 1.0 } else { -1.0 })
            .collect()
    }

    /// Zero-pads the support vectors to `dim` features.
    pub fn with_dim(&self, dim: usize) -> Result<SvmModel> {
        let d = self.dim();
        if dim < d {
            return Err(CvmError::Dimension { expected: d, got: dim });
        }
        let mut sv = Array2::zeros((self.n_sv(), dim));
        sv.slice_mut(ndarray::s![.., ..d]).assign(&self.support_vectors);
        let mut m = self.clone();
        m.support_vectors = sv;
        Ok(m)
    }

    /// Scores and labels for every row of `x`.
    pub fn decision_values(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        x.axis_iter(Axis(0))
            .map(|row| self.decision_value(&row.to_vec()))
            .collect()
    }

    pub(crate) fn label_for(&self, score: f64) -> i32 {
        if score > 0.0 {
            self.class_pair.1
        } else {
            self.class_pair.0
        }
    }
}

impl DecisionFunction for SvmModel {
    fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    fn n_sv(&self) -> usize {
        self.coef.len()
    }

    fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(CvmError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut s = self.bias;
        for (k, &c) in self.coef.iter().enumerate() {
            s += c * self.kernel.eval(self.support_vector(k), x);
        }
        Ok(s)
    }
}

impl Classifier for SvmModel {
    fn dim(&self) -> usize {
        DecisionFunction::dim(self)
    }

    fn predict_label(&self, x: &[f64]) -> Result<i32> {
        Ok(self.label_for(self.decision_value(x)?))
    }

    fn total_sv(&self) -> usize {
        self.n_sv()
    }
}

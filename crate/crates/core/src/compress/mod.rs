//! Support-vector selection under an evaluation-cost budget (LARS-SVM).
//!
//! The retraining problem over a model's support vectors, with the bias
//! frozen, is rewritten as least squares ([`build_surrogate`]) and LARS
//! ([`lars_select`]) is run for exactly `m` steps. The `m` activated
//! support vectors with their step-`m` coefficients form the LARS-SVM
//! model, which also initializes the gradient-support-vector optimizer.

mod lars;
mod surrogate;

pub use lars::{lars_select, LarsPath, LarsStep};
pub use surrogate::{build_surrogate, LarsProblem, DEFAULT_EIG_FLOOR};

use std::collections::HashMap;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{CvmError, Result};
use crate::kernel::KernelParams;
use crate::svm::SvmModel;

/// Test-time cost model: each kernel evaluation costs `per_kernel_cost`,
/// and a prediction may spend at most `budget`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBudget {
    per_kernel_cost: f64,
    budget: f64,
    max_sv: usize,
}

impl CostBudget {
    /// `m = floor(budget / per_kernel_cost)`, which must be at least 1.
    pub fn new(budget: f64, per_kernel_cost: f64) -> Result<Self> {
        if !(per_kernel_cost > 0.0 && per_kernel_cost.is_finite()) {
            return Err(CvmError::invalid("per-kernel cost must be positive"));
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(CvmError::invalid("budget must be positive"));
        }
        // Tolerate quotients like 0.3 / 0.1 = 2.9999999999999996.
        let ratio = budget / per_kernel_cost;
        let m = (ratio * (1.0 + 1e-12)).floor();
        if m < 1.0 {
            return Err(CvmError::invalid(format!(
                "budget {budget} buys no kernel evaluation at cost {per_kernel_cost}"
            )));
        }
        Ok(CostBudget {
            per_kernel_cost,
            budget,
            max_sv: m as usize,
        })
    }

    /// Budget of `m` support vectors at unit cost.
    pub fn from_count(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(CvmError::invalid("support-vector budget must be positive"));
        }
        Ok(CostBudget {
            per_kernel_cost: 1.0,
            budget: m as f64,
            max_sv: m,
        })
    }

    pub fn per_kernel_cost(&self) -> f64 {
        self.per_kernel_cost
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Number of support vectors the budget allows.
    pub fn max_sv(&self) -> usize {
        self.max_sv
    }
}

/// A model made of `m` of the source model's support vectors with LARS
/// coefficients and the source bias.
#[derive(Debug, Clone)]
pub struct LarsSvm {
    pub support_vectors: Array2<f64>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelParams,
    pub class_pair: (i32, i32),
    /// Indices into the source model's support vectors, activation order.
    pub sv_indices: Vec<usize>,
    pub path: LarsPath,
}

impl LarsSvm {
    /// LARS-SVM after the first `t` steps of `path`.
    pub fn from_path(source: &SvmModel, path: &LarsPath, t: usize) -> Result<Self> {
        if t == 0 || t > path.steps.len() {
            return Err(CvmError::invalid(format!(
                "path has {} steps, asked for {t}",
                path.steps.len()
            )));
        }
        let step = &path.steps[t - 1];
        let sv_indices: Vec<usize> = path.steps[..t].iter().map(|s| s.activated).collect();
        let d = source.dim();
        let mut sv = Array2::zeros((t, d));
        for (r, &i) in sv_indices.iter().enumerate() {
            sv.row_mut(r).assign(&source.support_vectors().row(i));
        }
        let coef = sv_indices.iter().map(|&i| step.coefficients[i]).collect();
        Ok(LarsSvm {
            support_vectors: sv,
            coef,
            bias: source.bias(),
            kernel: *source.kernel(),
            class_pair: source.class_pair(),
            sv_indices,
            path: path.truncate(t),
        })
    }

    pub fn n_sv(&self) -> usize {
        self.coef.len()
    }

    pub fn to_model(&self) -> SvmModel {
        SvmModel::new_allow_zero(
            self.support_vectors.clone(),
            self.coef.clone(),
            self.bias,
            self.kernel,
            None,
            self.class_pair,
        )
        .expect("LARS-SVM fields form a valid model")
    }
}

/// Picks `budget.max_sv()` support vectors of `model` by LARS.
///
/// `labels` are the ±1 targets of the support vectors; see
/// [`SvmModel::sv_signs`] when the training labels are not at hand.
pub fn select_support_vectors(
    model: &SvmModel,
    labels: &[f64],
    budget: &CostBudget,
    eig_floor: f64,
) -> Result<LarsSvm> {
    let m = budget.max_sv();
    if m > model.n_sv() {
        return Err(CvmError::invalid(format!(
            "budget of {m} support vectors exceeds the model's {}",
            model.n_sv()
        )));
    }
    let problem = build_surrogate(model, labels, eig_floor)?;
    let path = lars_select(&problem, m)?;
    let t = path.steps.len();
    if t == 0 {
        return Err(CvmError::Numerical("LARS selected no support vectors".into()));
    }
    LarsSvm::from_path(model, &path, t)
}

/// ±1 target of each support vector, looked up in the training data by exact
/// feature match. Support vectors not found there (or whose sample label is
/// outside the model's class pair) fall back to their coefficient sign.
pub fn support_vector_labels(model: &SvmModel, train: &Dataset) -> Result<Vec<f64>> {
    if train.dim() != model.dim() {
        return Err(CvmError::Dimension {
            expected: model.dim(),
            got: train.dim(),
        });
    }
    let (neg, pos) = model.class_pair();
    let key = |x: &[f64]| -> Vec<u64> { x.iter().map(|&v| if v == 0.0 { 0 } else { v.to_bits() }).collect() };
    let mut by_features: HashMap<Vec<u64>, i32> = HashMap::new();
    for s in train.samples() {
        if s.label == neg || s.label == pos {
            by_features.entry(key(&s.features)).or_insert(s.label);
        }
    }
    let signs = model.sv_signs();
    Ok((0..model.n_sv())
        .map(|k| match by_features.get(&key(model.support_vector(k))) {
            Some(&l) if l == pos => 1.0,
            Some(_) => -1.0,
            None => signs[k],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;
    use ndarray::array;

    #[test]
    fn labels_from_training_data() {
        let m = SvmModel::new(
            array![[0.0, 1.0], [2.0, 2.0], [5.0, 5.0]],
            vec![-0.5, 0.5, 0.25],
            0.0,
            KernelParams::new(1.0).unwrap(),
            None,
            (3, 7),
        )
        .unwrap();
        let train = Dataset::new(
            vec![Sample::new(vec![0.0, 1.0], 7), Sample::new(vec![2.0, 2.0], 3), Sample::new(vec![1.0, 1.0], 3)],
            2,
        )
        .unwrap();
        assert_eq!(support_vector_labels(&m, &train).unwrap(), vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn budget_arithmetic() {
        assert_eq!(CostBudget::new(80.0, 1.0).unwrap().max_sv(), 80);
        assert_eq!(CostBudget::new(0.3, 0.1).unwrap().max_sv(), 3);
        assert_eq!(CostBudget::new(7.9, 2.0).unwrap().max_sv(), 3);
        assert!(CostBudget::new(0.5, 1.0).is_err());
        assert!(CostBudget::new(1.0, 0.0).is_err());
        assert!(CostBudget::from_count(0).is_err());
        assert_eq!(CostBudget::from_count(8).unwrap().max_sv(), 8);
    }
}

//! Accuracy, evaluation cost and accuracy-versus-budget curves.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::compress::{build_surrogate, lars_select, support_vector_labels, LarsSvm};
use crate::data::Dataset;
use crate::error::{CvmError, Result};
use crate::gsv::{optimize, GsvConfig};
use crate::svm::{Classifier, SvmModel};

/// Fraction of samples whose predicted label is correct.
pub fn accuracy<M: Classifier + Sync + ?Sized>(model: &M, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(CvmError::invalid("accuracy of an empty dataset"));
    }
    if ds.dim() != model.dim() {
        return Err(CvmError::Dimension {
            expected: model.dim(),
            got: ds.dim(),
        });
    }
    let correct = ds
        .samples()
        .par_iter()
        .map(|s| model.predict_label(&s.features).map(|l| (l == s.label) as usize))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(correct as f64 / ds.len() as f64)
}

/// Cost of one prediction: support vectors summed over sub-models, times
/// the per-kernel cost `e`.
pub fn evaluation_cost<M: Classifier + ?Sized>(model: &M, e: f64) -> f64 {
    model.total_sv() as f64 * e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n_sv: usize,
    pub cost: f64,
    pub acc_lars: f64,
    pub acc_cvm: f64,
    pub acc_full: f64,
}

#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub step: usize,
    pub max_sv: usize,
    /// Per-kernel cost `e` used for the cost column.
    pub per_kernel_cost: f64,
    pub eig_floor: f64,
    pub gsv: GsvConfig,
}

impl CurveConfig {
    pub fn new(step: usize, max_sv: usize) -> Self {
        CurveConfig {
            step,
            max_sv,
            per_kernel_cost: 1.0,
            eig_floor: crate::compress::DEFAULT_EIG_FLOOR,
            gsv: GsvConfig::default(),
        }
    }

    /// `step, 2·step, …` up to `max_sv`.
    pub fn budgets(&self) -> Vec<usize> {
        (1..=self.max_sv / self.step.max(1)).map(|k| k * self.step).collect()
    }
}

/// Test accuracy of LARS-SVM and CVM at budgets `step, 2·step, …, max_sv`.
/// The LARS path is computed once, to `max_sv` steps.
pub fn build_curve(source: &SvmModel, train: &Dataset, test: &Dataset, cfg: &CurveConfig) -> Result<Vec<CurvePoint>> {
    if cfg.step == 0 {
        return Err(CvmError::invalid("curve step must be positive"));
    }
    if cfg.max_sv == 0 || cfg.max_sv > source.n_sv() {
        return Err(CvmError::invalid(format!(
            "max_sv must be in 1..={}, got {}",
            source.n_sv(),
            cfg.max_sv
        )));
    }
    let budgets = cfg.budgets();
    if budgets.is_empty() {
        return Err(CvmError::invalid("step exceeds max_sv; the curve is empty"));
    }
    let acc_full = accuracy(source, test)?;
    let labels = support_vector_labels(source, train)?;
    let problem = build_surrogate(source, &labels, cfg.eig_floor)?;
    let path = lars_select(&problem, cfg.max_sv)?;
    if path.steps.len() < cfg.max_sv {
        log::warn!("LARS path stopped after {} of {} steps", path.steps.len(), cfg.max_sv);
    }
    budgets
        .par_iter()
        .filter(|&&m| m <= path.steps.len())
        .map(|&m| {
            let lars = LarsSvm::from_path(source, &path, m)?;
            let acc_lars = accuracy(&lars.to_model(), test)?;
            let cvm = optimize(&lars, source, &cfg.gsv)?;
            let acc_cvm = accuracy(&cvm, test)?;
            log::info!("curve m={m}: lars {acc_lars:.4} cvm {acc_cvm:.4} full {acc_full:.4}");
            Ok(CurvePoint {
                n_sv: m,
                cost: m as f64 * cfg.per_kernel_cost,
                acc_lars,
                acc_cvm,
                acc_full,
            })
        })
        .collect()
}

pub const CURVE_HEADER: &str = "n_sv,cost,acc_lars,acc_cvm,acc_full";

pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        writeln!(out, "{},{},{},{},{}", p.n_sv, p.cost, p.acc_lars, p.acc_cvm, p.acc_full).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Sample;

    struct Constant(i32, usize);

    impl Classifier for Constant {
        fn dim(&self) -> usize {
            1
        }
        fn predict_label(&self, _: &[f64]) -> Result<i32> {
            Ok(self.0)
        }
        fn total_sv(&self) -> usize {
            self.1
        }
    }

    struct Threshold(bool);

    impl Classifier for Threshold {
        fn dim(&self) -> usize {
            1
        }
        fn predict_label(&self, x: &[f64]) -> Result<i32> {
            Ok(if (x[0] > 0.0) != self.0 { 1 } else { -1 })
        }
        fn total_sv(&self) -> usize {
            1
        }
    }

    fn ds(n_pos: usize, n_neg: usize) -> Dataset {
        let s = (0..n_pos)
            .map(|i| Sample::new(vec![1.0 + i as f64], 1))
            .chain((0..n_neg).map(|i| Sample::new(vec![-1.0 - i as f64], -1)))
            .collect();
        Dataset::new(s, 1).unwrap()
    }

    #[test]
    fn majority_predictor() {
        assert_eq!(accuracy(&Constant(1, 0), &ds(7, 3)).unwrap(), 0.7);
    }

    #[test]
    fn perfect_and_flipped() {
        let mut d = ds(6, 4).samples().to_vec();
        d[0].label = -1;
        let d = Dataset::new(d, 1).unwrap();
        let a = accuracy(&Threshold(false), &d).unwrap();
        let b = accuracy(&Threshold(true), &d).unwrap();
        assert_eq!(a, 0.9);
        assert!((a + b - 1.0).abs() < 1e-15);
        assert_eq!(accuracy(&Threshold(false), &ds(3, 3)).unwrap(), 1.0);
    }

    #[test]
    fn empty_or_mismatched() {
        struct Wide;
        impl Classifier for Wide {
            fn dim(&self) -> usize {
                2
            }
            fn predict_label(&self, _: &[f64]) -> Result<i32> {
                Ok(1)
            }
            fn total_sv(&self) -> usize {
                1
            }
        }
        assert!(accuracy(&Wide, &ds(1, 1)).is_err());
        let empty = ds(1, 0).subset(&[]);
        assert!(accuracy(&Constant(1, 0), &empty).is_err());
    }

    #[test]
    fn cost_formula() {
        assert_eq!(evaluation_cost(&Constant(1, 80), 1.0), 80.0);
        assert_eq!(evaluation_cost(&Constant(1, 8), 1.0), 8.0);
        assert_eq!(evaluation_cost(&Constant(1, 30), 2.0), 60.0);
    }

    #[test]
    fn schedule_and_csv() {
        let c = CurveConfig::new(10, 30);
        assert_eq!(c.budgets(), vec![10, 20, 30]);
        assert_eq!(CurveConfig::new(10, 35).budgets(), vec![10, 20, 30]);
        let p = CurvePoint {
            n_sv: 10,
            cost: 10.0,
            acc_lars: 0.5,
            acc_cvm: 0.75,
            acc_full: 1.0,
        };
        assert_eq!(curve_to_csv(&[p]), "n_sv,cost,acc_lars,acc_cvm,acc_full\n10,10,0.5,0.75,1\n");
    }
}

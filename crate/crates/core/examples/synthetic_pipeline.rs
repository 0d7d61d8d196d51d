//! Two-circle data end to end: grid search, full SVM, compression to 8
//! support vectors, and agreement of the decision boundaries on a grid.

use cvm::compress::{support_vector_labels, CostBudget, DEFAULT_EIG_FLOOR};
use cvm::data::generate_circle_synthetic;
use cvm::gsv::{compress_model, GsvConfig};
use cvm::svm::{grid_search, train, DecisionFunction};
use cvm::{KernelParams, SplitSpec, TrainConfig};

fn agreement(a: &dyn DecisionFunction, b: &dyn DecisionFunction) -> f64 {
    let n = 200;
    let mut same = 0;
    for i in 0..n {
        for j in 0..n {
            let x = [-6.0 + 12.0 * i as f64 / (n - 1) as f64, -6.0 + 12.0 * j as f64 / (n - 1) as f64];
            let fa = a.decision_value(&x).unwrap();
            let fb = b.decision_value(&x).unwrap();
            if (fa > 0.0) == (fb > 0.0) {
                same += 1;
            }
        }
    }
    same as f64 / (n * n) as f64
}

fn main() -> cvm::Result<()> {
    let ds = generate_circle_synthetic(600, 0)?;
    let grid = grid_search(
        &ds,
        &[10.0, 100.0, 1000.0],
        &[1.0, 2.0, 4.0],
        &SplitSpec::new(0.2, 0)?,
        &TrainConfig::new(1.0, KernelParams::new(1.0)?),
    )?;
    println!("best C={} sigma={} (validation accuracy {:.3})", grid.best_c, grid.best_sigma, grid.best_accuracy);

    let full = train(&ds, &TrainConfig::new(grid.best_c, KernelParams::new(grid.best_sigma)?))?;
    println!("full model: {} support vectors", full.n_sv());

    let labels = support_vector_labels(&full, &ds)?;
    let budget = CostBudget::from_count(8)?;
    let lars = compress_model(&full, &labels, &budget, DEFAULT_EIG_FLOOR, None)?;
    let cvm = compress_model(&full, &labels, &budget, DEFAULT_EIG_FLOOR, Some(&GsvConfig::with_iters(2560)))?;
    println!("LARS-SVM agreement with full model: {:.4}", agreement(&lars, &full));
    println!("CVM agreement with full model:      {:.4}", agreement(&cvm, &full));
    Ok(())
}

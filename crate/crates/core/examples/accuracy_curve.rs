//! Test accuracy of LARS-SVM and CVM against the number of support vectors,
//! written as CSV to stdout.
//!
//! Usage: `cargo run --example accuracy_curve [data.svm]`. With a file, the
//! features are standardized and a 20% test split is held out.

use cvm::data::{generate_circle_synthetic, split, standardize};
use cvm::eval::{build_curve, curve_to_csv, CurveConfig};
use cvm::gsv::GsvConfig;
use cvm::svm::train;
use cvm::{Dataset, KernelParams, SplitSpec, TrainConfig};

fn main() -> cvm::Result<()> {
    let (ds, sigma) = match std::env::args().nth(1) {
        Some(path) => (Dataset::load(path, None)?, 2.0),
        None => (generate_circle_synthetic(600, 3)?, 1.0),
    };
    let (train_set, test_set) = split(&ds, &SplitSpec::new(0.2, 0)?)?;
    let (train_set, rest, _) = standardize(&train_set, &[test_set])?;
    let test_set = &rest[0];

    let full = train(&train_set, &TrainConfig::new(1.0, KernelParams::new(sigma)?))?;
    let mut cfg = CurveConfig::new(10, 100.min(full.n_sv()));
    cfg.gsv = GsvConfig::with_iters(500);
    let points = build_curve(&full, &train_set, test_set, &cfg)?;
    print!("{}", curve_to_csv(&points));
    Ok(())
}

//! Load a model trained by LibSVM, check its decision values against the
//! ones LibSVM printed, then compress it and write the result back out in
//! the same format.

use std::path::Path;

use cvm::compress::{support_vector_labels, CostBudget, DEFAULT_EIG_FLOOR};
use cvm::gsv::{compress_model, GsvConfig};
use cvm::model_io::{load_model, model_to_string, Model};
use cvm::{Dataset, DecisionFunction};

fn main() -> cvm::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let Model::Binary(model) = load_model(dir.join("reference.model"))? else {
        panic!("fixture is a binary model")
    };
    println!("loaded {} SVs, sigma {:.4}, bias {:.6}", model.n_sv(), model.kernel().sigma(), model.bias());

    let reference = std::fs::read_to_string(dir.join("reference_decisions.txt"))?;
    let mut worst = 0.0f64;
    for line in reference.lines().filter(|l| !l.starts_with('#')) {
        let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
        worst = worst.max((model.decision_value(&v[..2])? - v[2]).abs());
    }
    println!("largest difference from LibSVM's decision values: {worst:.2e}");

    let train = Dataset::load(dir.join("reference_train.svm"), Some(model.dim()))?;
    let labels = support_vector_labels(&model, &train)?;
    let small = compress_model(&model, &labels, &CostBudget::from_count(4)?, DEFAULT_EIG_FLOOR, Some(&GsvConfig::default()))?;
    print!("{}", model_to_string(&small.to_model())?);
    Ok(())
}

//! Train a binary SVM, write it as a LibSVM model file and load it back.
//!
//! Usage: `cargo run --example train_and_save [data.svm]` (defaults to the
//! synthetic two-circle set).

use cvm::data::{generate_circle_synthetic, split};
use cvm::eval::accuracy;
use cvm::model_io::{load_model, save_model, Model};
use cvm::svm::train;
use cvm::{Dataset, DecisionFunction, KernelParams, SplitSpec, TrainConfig};

fn main() -> cvm::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(path) => Dataset::load(path, None)?,
        None => generate_circle_synthetic(600, 1)?,
    };
    let (train_set, test_set) = split(&ds, &SplitSpec::new(0.2, 0)?)?;
    let model = train(&train_set, &TrainConfig::new(10.0, KernelParams::new(1.0)?))?;
    println!(
        "{} support vectors, bias {:.4}, test accuracy {:.4}",
        model.n_sv(),
        model.bias(),
        accuracy(&model, &test_set)?
    );

    let path = std::env::temp_dir().join("cvm_example.model");
    save_model(&model, &path)?;
    let Model::Binary(loaded) = load_model(&path)? else {
        unreachable!("a binary model was written")
    };
    let x = &test_set.samples()[0].features;
    println!(
        "score before/after reload: {} / {}",
        model.decision_value(x)?,
        loaded.decision_value(x)?
    );
    println!("model written to {}", path.display());
    Ok(())
}

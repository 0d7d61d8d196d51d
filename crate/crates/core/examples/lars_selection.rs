//! Support-vector selection with LARS: how test accuracy grows as the
//! budget allows more of the full model's support vectors.

use cvm::compress::{build_surrogate, lars_select, support_vector_labels, LarsSvm, DEFAULT_EIG_FLOOR};
use cvm::data::{generate_circle_synthetic, split};
use cvm::eval::accuracy;
use cvm::svm::train;
use cvm::{KernelParams, SplitSpec, TrainConfig};

fn main() -> cvm::Result<()> {
    let ds = generate_circle_synthetic(600, 2)?;
    let (train_set, test_set) = split(&ds, &SplitSpec::new(0.2, 0)?)?;
    let full = train(&train_set, &TrainConfig::new(1.0, KernelParams::new(1.0)?))?;
    println!("full model: {} SVs, test accuracy {:.4}", full.n_sv(), accuracy(&full, &test_set)?);

    let labels = support_vector_labels(&full, &train_set)?;
    let problem = build_surrogate(&full, &labels, DEFAULT_EIG_FLOOR)?;
    let steps = 20.min(full.n_sv());
    let path = lars_select(&problem, steps)?;
    for t in 1..=path.steps.len() {
        let m = LarsSvm::from_path(&full, &path, t)?;
        println!(
            "m={t:2}  added SV #{:<4} |c|={:.3e}  test accuracy {:.4}",
            path.steps[t - 1].activated,
            path.steps[t - 1].correlation,
            accuracy(&m.to_model(), &test_set)?
        );
    }
    Ok(())
}

//! Gradient support vectors: start from the LARS-SVM model and move the
//! support vectors to match the full model, printing the loss as it drops.

use cvm::compress::{select_support_vectors, support_vector_labels, CostBudget, DEFAULT_EIG_FLOOR};
use cvm::data::generate_circle_synthetic;
use cvm::gsv::{optimize_traced, GsvConfig};
use cvm::svm::train;
use cvm::{KernelParams, TrainConfig};

fn main() -> cvm::Result<()> {
    let ds = generate_circle_synthetic(600, 0)?;
    let full = train(&ds, &TrainConfig::new(10.0, KernelParams::new(1.0)?))?;
    let labels = support_vector_labels(&full, &ds)?;
    let init = select_support_vectors(&full, &labels, &CostBudget::from_count(8)?, DEFAULT_EIG_FLOOR)?;

    let out = optimize_traced(&init, &full, &GsvConfig::with_iters(2560))?;
    for (i, loss) in out.losses.iter().enumerate().step_by(256) {
        println!("iteration {i:5}: loss {loss:.6e}");
    }
    println!(
        "stopped after {} iterations ({:?}); loss {:.3e} -> {:.3e}",
        out.model.provenance.iterations,
        out.termination,
        out.initial_loss(),
        out.final_loss()
    );
    for (k, (before, after)) in init
        .support_vectors
        .outer_iter()
        .zip(out.model.support_vectors().outer_iter())
        .enumerate()
    {
        println!("SV {k}: ({:6.3}, {:6.3}) -> ({:6.3}, {:6.3})", before[0], before[1], after[0], after[1]);
    }
    Ok(())
}

//! One-vs-one multi-class: train on three Gaussian blobs, compress every
//! pair model to 3 support vectors and write a LibSVM multi-class file.

use cvm::compress::{CostBudget, DEFAULT_EIG_FLOOR};
use cvm::eval::{accuracy, evaluation_cost};
use cvm::gsv::{compress_multiclass, GsvConfig};
use cvm::model_io::model_to_string;
use cvm::svm::train_one_vs_one;
use cvm::{Classifier, Dataset, KernelParams, Sample, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> cvm::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.8).unwrap();
    let centers = [(1, [0.0, 0.0]), (2, [3.0, 0.0]), (3, [1.5, 2.5])];
    let mut samples = Vec::new();
    for (label, c) in centers {
        for _ in 0..80 {
            let x = vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)];
            samples.push(Sample::new(x, label));
        }
    }
    let ds = Dataset::new(samples, 2)?;

    let full = train_one_vs_one(&ds, &TrainConfig::new(10.0, KernelParams::new(1.0)?))?;
    println!(
        "full: {} pair models, {} SVs in total, cost {}, training accuracy {:.4}",
        full.pairs().len(),
        full.total_sv(),
        evaluation_cost(&full, 1.0),
        accuracy(&full, &ds)?
    );

    let small = compress_multiclass(
        &full,
        Some(&ds),
        &CostBudget::from_count(3)?,
        DEFAULT_EIG_FLOOR,
        Some(&GsvConfig::with_iters(1000)),
    )?;
    println!(
        "compressed: {} SVs in total, cost {}, training accuracy {:.4}",
        small.total_sv(),
        evaluation_cost(&small, 1.0),
        accuracy(&small, &ds)?
    );
    let text = model_to_string(&small)?;
    println!("\n{}", text.lines().take(10).collect::<Vec<_>>().join("\n"));
    Ok(())
}

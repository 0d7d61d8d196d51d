//! Squared-hinge RBF SVMs: training, prediction, one-vs-one multi-class and
//! hyperparameter search.

mod grid;
mod model;
mod multiclass;
mod trainer;

pub use grid::{grid_search, GridCell, GridResult};
pub use model::{predict_score, Classifier, DecisionFunction, SvmModel};
pub use multiclass::{class_pairs, train_one_vs_one, MultiClassModel};
pub use trainer::{train, train_detailed, TrainConfig, TrainReport};

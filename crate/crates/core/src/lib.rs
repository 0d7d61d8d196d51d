//! # cvm
//!
//! Compressed vector machines: train an RBF-kernel SVM with the squared
//! hinge loss, then shrink it to a budget of `m` support vectors.
//!
//! Compression runs in two stages:
//!
//! 1. **LARS-SVM** ([`compress`]). The retraining problem restricted to the
//!    support vectors is rewritten as an ordinary least-squares problem
//!    `min ‖Ωa + β‖²` and least angle regression is run for exactly `m`
//!    steps. The `m` activated support vectors and their coefficients form
//!    an intermediate model.
//! 2. **Gradient support vectors** ([`gsv`]). Starting from the LARS-SVM
//!    model, support-vector positions and coefficients are moved jointly by
//!    nonlinear conjugate gradient so that the compressed model's predictions
//!    on the original support vectors match the full model.
//!
//! The result is an ordinary SVM and is written in the LibSVM model format
//! ([`model_io`]), so any LibSVM-compatible predictor can load it.
//!
//! The `examples/` directory has one runnable program per capability; the
//! `cvm` binary is a thin command-line driver over [`cli`].

pub mod cli;
pub mod compress;
pub mod data;
pub mod error;
pub mod eval;
pub mod gsv;
pub mod kernel;
pub mod linalg;
pub mod model_io;
mod numfmt;
pub mod svm;

pub use compress::{CostBudget, LarsPath, LarsProblem, LarsSvm};
pub use data::{Dataset, Sample, SplitSpec};
pub use error::{CvmError, Result};
pub use gsv::{CompressedModel, GsvConfig};
pub use kernel::{Kernel, KernelParams};
pub use svm::{Classifier, DecisionFunction, MultiClassModel, SvmModel, TrainConfig};

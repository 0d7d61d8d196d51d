//! Command-line driver behind the `cvm` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numerical
//! failure. Logging goes to stderr, filtered by the `CVM_LOG` variable
//! (`error`, `info`, `debug`; default `warn`).
//!
//! `train --standardize` stores the fitted feature scaling next to the model
//! as `<model>.scale`; every command that reads a model applies it to its
//! data when present, and `compress` copies it alongside its output.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::compress::{support_vector_labels, CostBudget, DEFAULT_EIG_FLOOR};
use crate::data::{generate_circle_synthetic, Dataset, SplitSpec, Standardizer};
use crate::error::{CvmError, Result};
use crate::eval::{accuracy, build_curve, curve_to_csv, evaluation_cost, CurveConfig};
use crate::gsv::{compress_model, compress_multiclass, GsvConfig};
use crate::kernel::KernelParams;
use crate::model_io::{load_model, save_model, Model};
use crate::svm::{grid_search, train_one_vs_one, Classifier, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "cvm", version, about = "Train RBF SVMs and compress them to a support-vector budget")]
pub struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the two-circle synthetic dataset in LibSVM format.
    Synth(SynthArgs),
    /// Train an SVM (one-vs-one for more than two classes).
    Train(TrainArgs),
    /// Grid search over C and sigma on a validation split.
    Grid(GridArgs),
    /// Compress a model to a support-vector budget.
    Compress(CompressArgs),
    /// Report accuracy, support-vector count and evaluation cost.
    Eval(EvalArgs),
    /// Accuracy versus budget for LARS-SVM and CVM, as CSV.
    Curve(CurveArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub sigma: f64,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Standardize features; the scaling is saved as `<model>.scale`.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub c_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sigma_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub standardize: bool,
    /// Retrain on all of `--data` with the best pair and save the model.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Training data; supplies support-vector labels.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of support vectors to keep.
    #[arg(long, conflicts_with = "budget_cost", required_unless_present = "budget_cost")]
    pub budget: Option<usize>,
    /// Budget in cost units; allows `floor(budget_cost / per_kernel_cost)` SVs.
    #[arg(long)]
    pub budget_cost: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub per_kernel_cost: f64,
    #[arg(long, default_value_t = 2560)]
    pub iters: usize,
    /// Stop after support-vector selection.
    #[arg(long)]
    pub lars_only: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub per_kernel_cost: f64,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Training data; supplies support-vector labels.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub step: usize,
    /// Largest budget; defaults to min(100, n_sv).
    #[arg(long)]
    pub max_sv: Option<usize>,
    #[arg(long, default_value_t = 2560)]
    pub iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub per_kernel_cost: f64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for a failed command.
pub fn exit_code(err: &CvmError) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// Parses `args` (program name first), runs the command, returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("CVM_LOG", "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("cvm: --threads must be positive");
            return 1;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("thread pool already initialized: {e}");
        }
    }
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cvm: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Grid(a) => grid(a),
        Command::Compress(a) => compress(a),
        Command::Eval(a) => eval(a),
        Command::Curve(a) => curve(a),
    }
}

fn scale_path(model: &Path) -> PathBuf {
    let mut p = model.as_os_str().to_owned();
    p.push(".scale");
    PathBuf::from(p)
}

fn load_scaler(model: &Path) -> Result<Option<Standardizer>> {
    let p = scale_path(model);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(Standardizer::from_text(&std::fs::read_to_string(p)?)?))
}

/// Loads a model and a dataset, applies the model's scaling, and pads both
/// to a common dimension.
fn load_pair(model: &Path, data: &[&Path]) -> Result<(Model, Vec<Dataset>)> {
    let m = load_model(model)?;
    let scaler = load_scaler(model)?;
    let mut sets = Vec::with_capacity(data.len());
    for p in data {
        let mut ds = Dataset::load(p, None)?;
        if let Some(s) = &scaler {
            ds = s.apply(&ds.with_dim(s.means.len())?)?;
        }
        sets.push(ds);
    }
    let dim = sets.iter().map(|d| d.dim()).fold(m.dim(), usize::max);
    let m = m.with_dim(dim)?;
    let sets = sets.into_iter().map(|d| d.with_dim(dim)).collect::<Result<_>>()?;
    Ok((m, sets))
}

fn synth(a: SynthArgs) -> Result<()> {
    let ds = generate_circle_synthetic(a.n, a.seed)?;
    ds.save(&a.out)?;
    println!("wrote {} samples to {}", ds.len(), a.out.display());
    Ok(())
}

fn fit_and_save(ds: &Dataset, c: f64, sigma: f64, standardize: bool, out: &Path) -> Result<()> {
    let (ds, scaler) = if standardize {
        let s = Standardizer::fit(ds)?;
        (s.apply(ds)?, Some(s))
    } else {
        (ds.clone(), None)
    };
    let cfg = TrainConfig::new(c, KernelParams::new(sigma)?);
    let model = train_one_vs_one(&ds, &cfg)?;
    let acc = accuracy(&model, &ds)?;
    let file: Model = if model.classes().len() == 2 {
        Model::Binary(model.into_pairs().remove(0))
    } else {
        Model::MultiClass(model)
    };
    save_model(&file, out)?;
    let sp = scale_path(out);
    match scaler {
        Some(s) => std::fs::write(sp, s.to_text())?,
        None if sp.exists() => std::fs::remove_file(sp)?,
        None => {}
    }
    println!("n_sv {}", file.total_sv());
    println!("train_accuracy {acc}");
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let ds = Dataset::load(&a.data, None)?;
    fit_and_save(&ds, a.c, a.sigma, a.standardize, &a.model)
}

fn grid(a: GridArgs) -> Result<()> {
    let ds = Dataset::load(&a.data, None)?;
    let scaled = if a.standardize {
        Standardizer::fit(&ds)?.apply(&ds)?
    } else {
        ds.clone()
    };
    let spec = SplitSpec::new(a.val_frac, a.seed)?;
    let template = TrainConfig::new(1.0, KernelParams::new(1.0)?);
    let res = grid_search(&scaled, &a.c_grid, &a.sigma_grid, &spec, &template)?;
    println!("c,sigma,accuracy");
    for cell in &res.table {
        match &cell.accuracy {
            Ok(acc) => println!("{},{},{acc}", cell.c_param, cell.sigma),
            Err(e) => println!("{},{},failed: {e}", cell.c_param, cell.sigma),
        }
    }
    println!("best c={} sigma={} accuracy={}", res.best_c, res.best_sigma, res.best_accuracy);
    if let Some(out) = &a.model {
        fit_and_save(&ds, res.best_c, res.best_sigma, a.standardize, out)?;
    }
    Ok(())
}

fn compress(a: CompressArgs) -> Result<()> {
    let (model, sets) = load_pair(&a.model, &[&a.data])?;
    let ds = &sets[0];
    let budget = match (a.budget, a.budget_cost) {
        (Some(m), _) => CostBudget::from_count(m)?,
        (None, Some(b)) => CostBudget::new(b, a.per_kernel_cost)?,
        (None, None) => return Err(CvmError::invalid("give --budget or --budget-cost")),
    };
    let gsv = (!a.lars_only).then(|| GsvConfig::with_iters(a.iters));
    let out: Model = match &model {
        Model::Binary(m) => {
            let labels = support_vector_labels(m, ds)?;
            let c = compress_model(m, &labels, &budget, DEFAULT_EIG_FLOOR, gsv.as_ref())?;
            info!("compressed {} -> {} support vectors", m.n_sv(), c.total_sv());
            Model::Binary(c.to_model())
        }
        Model::MultiClass(m) => Model::MultiClass(compress_multiclass(m, Some(ds), &budget, DEFAULT_EIG_FLOOR, gsv.as_ref())?),
    };
    save_model(&out, &a.out)?;
    let src_scale = scale_path(&a.model);
    if src_scale.exists() {
        std::fs::copy(src_scale, scale_path(&a.out))?;
    }
    println!("n_sv {}", out.total_sv());
    println!("cost {}", evaluation_cost(&out, budget.per_kernel_cost()));
    println!("train_accuracy {}", accuracy(&out, ds)?);
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let (model, sets) = load_pair(&a.model, &[&a.data])?;
    println!("accuracy {}", accuracy(&model, &sets[0])?);
    println!("n_sv {}", model.total_sv());
    println!("cost {}", evaluation_cost(&model, a.per_kernel_cost));
    Ok(())
}

fn curve(a: CurveArgs) -> Result<()> {
    let (model, sets) = load_pair(&a.model, &[&a.data, &a.test])?;
    let Model::Binary(m) = model else {
        return Err(CvmError::Unsupported("curves are built for binary models".into()));
    };
    let max_sv = a.max_sv.unwrap_or(100.min(m.n_sv()));
    let mut cfg = CurveConfig::new(a.step, max_sv);
    cfg.per_kernel_cost = a.per_kernel_cost;
    cfg.gsv = GsvConfig::with_iters(a.iters);
    let points = build_curve(&m, &sets[0], &sets[1], &cfg)?;
    let csv = curve_to_csv(&points);
    match &a.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["cvm"]), 1);
        assert_eq!(run(["cvm", "frobnicate"]), 1);
        assert_eq!(run(["cvm", "train", "--data", "x.svm"]), 1);
        assert_eq!(run(["cvm", "compress", "--model", "m", "--data", "d", "--out", "o"]), 1);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["cvm", "--help"]), 0);
    }

    #[test]
    fn missing_file_exits_two() {
        assert_eq!(run(["cvm", "eval", "--model", "/nonexistent/m", "--data", "/nonexistent/d"]), 2);
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&CvmError::invalid("x")), 2);
        assert_eq!(exit_code(&CvmError::Numerical("x".into())), 3);
        assert_eq!(
            exit_code(&CvmError::NonConvergence {
                iterations: 1,
                grad_norm: 1.0
            }),
            3
        );
    }

    #[test]
    fn scale_sidecar_name() {
        assert_eq!(scale_path(Path::new("a/b.model")), PathBuf::from("a/b.model.scale"));
    }
}

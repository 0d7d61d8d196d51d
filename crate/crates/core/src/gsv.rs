//! Gradient support vectors.
//!
//! Given a LARS-SVM model with `m` support vectors, moves the support
//! vectors and their coefficients jointly to minimize
//!
//! ```text
//! L(X, α) = ‖K_m·α − t‖²,    t = K·coef (source model, bias excluded)
//! ```
//!
//! where row `i` of `K_m` holds kernel values between anchor `i` (by default
//! the source model's support vectors) and the `m` moving support vectors.
//! The bias is shared by both models and cancels. The optimizer is
//! Polak–Ribière+ nonlinear conjugate gradient with Armijo backtracking over
//! the concatenated variable `(X, α)`, diagonally preconditioned by the
//! Gauss-Newton diagonal at the initial point.

use std::fmt::Write as _;

use log::{debug, info};
use ndarray::{Array2, ArrayView2, Axis};
use sha2::{Digest, Sha256};

use crate::compress::{select_support_vectors, support_vector_labels, CostBudget, LarsSvm};
use crate::data::Dataset;
use crate::error::{CvmError, Result};
use crate::kernel::{Kernel, KernelParams};
use crate::svm::{Classifier, DecisionFunction, MultiClassModel, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    /// Sufficient-decrease constant `c1 ∈ (0, 1)`.
    pub armijo: f64,
    /// Step shrink factor in `(0, 1)`.
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

/// Points whose predictions the compressed model must match.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Anchors {
    /// The source model's support vectors.
    #[default]
    SupportVectors,
    /// Arbitrary points, e.g. the full training set.
    Points(Array2<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsvConfig {
    pub max_iters: usize,
    /// Stop when one iteration lowers the loss by less than this fraction.
    pub loss_rel_tol: f64,
    /// Stop when `‖∇L‖ ≤ grad_tol·(1 + L₀)`.
    pub grad_tol: f64,
    /// Steepest-descent restart period; `None` means 10 × variable count.
    pub cg_restart_period: Option<usize>,
    pub line_search: LineSearch,
    pub anchors: Anchors,
}

impl Default for GsvConfig {
    fn default() -> Self {
        GsvConfig {
            max_iters: 2560,
            loss_rel_tol: 1e-10,
            grad_tol: 1e-8,
            cg_restart_period: None,
            line_search: LineSearch::default(),
            anchors: Anchors::SupportVectors,
        }
    }
}

impl GsvConfig {
    pub fn with_iters(max_iters: usize) -> Self {
        GsvConfig {
            max_iters,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ls = &self.line_search;
        if !(ls.armijo > 0.0 && ls.armijo < 1.0) || !(ls.backtrack > 0.0 && ls.backtrack < 1.0) {
            return Err(CvmError::invalid("line-search constants must lie in (0, 1)"));
        }
        if !(self.loss_rel_tol >= 0.0) || !(self.grad_tol >= 0.0) {
            return Err(CvmError::invalid("tolerances must be nonnegative"));
        }
        if self.cg_restart_period == Some(0) {
            return Err(CvmError::invalid("CG restart period must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// SHA-256 over the source model's parameters, hex.
    pub source_digest: String,
    /// CG iterations performed; zero for a plain LARS-SVM model.
    pub iterations: usize,
}

/// A model with `m` artificial support vectors. Predicts exactly like an
/// [`SvmModel`] and converts into one with [`CompressedModel::to_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedModel {
    support_vectors: Array2<f64>,
    coef: Vec<f64>,
    bias: f64,
    kernel: KernelParams,
    class_pair: (i32, i32),
    pub provenance: Provenance,
}

impl CompressedModel {
    /// The LARS-SVM model itself, with zero iterations recorded.
    pub fn from_lars(init: &LarsSvm, source: &SvmModel) -> Self {
        CompressedModel {
            support_vectors: init.support_vectors.clone(),
            coef: init.coef.clone(),
            bias: init.bias,
            kernel: init.kernel,
            class_pair: init.class_pair,
            provenance: Provenance {
                source_digest: model_digest(source),
                iterations: 0,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    pub fn n_sv(&self) -> usize {
        self.coef.len()
    }

    pub fn support_vectors(&self) -> &Array2<f64> {
        &self.support_vectors
    }

    pub fn coef(&self) -> &[f64] {
        &self.coef
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn class_pair(&self) -> (i32, i32) {
        self.class_pair
    }

    /// The same predictor as a plain SVM model, ready to be written out.
    pub fn to_model(&self) -> SvmModel {
        SvmModel::new_allow_zero(
            self.support_vectors.clone(),
            self.coef.clone(),
            self.bias,
            self.kernel,
            None,
            self.class_pair,
        )
        .expect("compressed model fields form a valid SVM")
    }
}

impl DecisionFunction for CompressedModel {
    fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    fn n_sv(&self) -> usize {
        self.coef.len()
    }

    fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.support_vectors.ncols() {
            return Err(CvmError::Dimension {
                expected: self.support_vectors.ncols(),
                got: x.len(),
            });
        }
        let mut s = self.bias;
        for (row, &c) in self.support_vectors.axis_iter(Axis(0)).zip(&self.coef) {
            s += c * self.kernel.eval(row.as_slice().expect("standard layout"), x);
        }
        Ok(s)
    }
}

impl Classifier for CompressedModel {
    fn dim(&self) -> usize {
        DecisionFunction::dim(self)
    }

    fn predict_label(&self, x: &[f64]) -> Result<i32> {
        let s = self.decision_value(x)?;
        Ok(if s > 0.0 { self.class_pair.1 } else { self.class_pair.0 })
    }

    fn total_sv(&self) -> usize {
        self.n_sv()
    }
}

/// Hex SHA-256 of a model's support vectors, coefficients, bias and σ.
pub fn model_digest(model: &SvmModel) -> String {
    let mut h = Sha256::new();
    h.update((model.n_sv() as u64).to_le_bytes());
    h.update((model.dim() as u64).to_le_bytes());
    for v in model.support_vectors().iter().chain(model.coef()) {
        h.update(v.to_le_bytes());
    }
    h.update(model.bias().to_le_bytes());
    h.update(model.kernel().sigma().to_le_bytes());
    let mut out = String::with_capacity(64);
    for b in h.finalize() {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

fn check_shapes(svs: &ArrayView2<f64>, alpha: &[f64], anchors: &ArrayView2<f64>, target: &[f64]) -> Result<()> {
    if svs.nrows() != alpha.len() {
        return Err(CvmError::Dimension {
            expected: svs.nrows(),
            got: alpha.len(),
        });
    }
    if anchors.nrows() != target.len() {
        return Err(CvmError::Dimension {
            expected: anchors.nrows(),
            got: target.len(),
        });
    }
    if svs.ncols() != anchors.ncols() {
        return Err(CvmError::Dimension {
            expected: anchors.ncols(),
            got: svs.ncols(),
        });
    }
    Ok(())
}

/// `‖K_m·α − t‖²` with `K_m[i, k] = K(anchor_i, sv_k)`.
pub fn cvm_loss<K: Kernel>(
    svs: ArrayView2<f64>,
    alpha: &[f64],
    anchors: ArrayView2<f64>,
    target: &[f64],
    kernel: &K,
) -> Result<f64> {
    check_shapes(&svs, alpha, &anchors, target)?;
    let obj = Objective::new(anchors.to_owned(), target.to_vec(), kernel, svs.nrows());
    let vars = pack(&svs.to_owned(), alpha);
    Ok(obj.loss(&vars).0)
}

/// Gradients of [`cvm_loss`] with respect to the support vectors and α.
pub fn cvm_grad<K: Kernel>(
    svs: ArrayView2<f64>,
    alpha: &[f64],
    anchors: ArrayView2<f64>,
    target: &[f64],
    kernel: &K,
) -> Result<(Array2<f64>, Vec<f64>)> {
    check_shapes(&svs, alpha, &anchors, target)?;
    let m = svs.nrows();
    let d = svs.ncols();
    let obj = Objective::new(anchors.to_owned(), target.to_vec(), kernel, m);
    let vars = pack(&svs.to_owned(), alpha);
    let (_, cache) = obj.loss(&vars);
    let g = obj.gradient(&vars, &cache);
    let gx = Array2::from_shape_vec((m, d), g[..m * d].to_vec()).expect("shape");
    Ok((gx, g[m * d..].to_vec()))
}

/// `[X row-major, α]`
fn pack(x: &Array2<f64>, alpha: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().copied().collect();
    v.extend_from_slice(alpha);
    v
}

struct Objective<'k, K> {
    anchors: Array2<f64>,
    target: Vec<f64>,
    kernel: &'k K,
    m: usize,
    d: usize,
}

/// Kernel block and residual from the last loss evaluation.
struct LossCache {
    km: Vec<f64>,
    residual: Vec<f64>,
}

impl<'k, K: Kernel> Objective<'k, K> {
    fn new(anchors: Array2<f64>, target: Vec<f64>, kernel: &'k K, m: usize) -> Self {
        let d = anchors.ncols();
        let anchors = anchors.as_standard_layout().into_owned();
        Objective {
            anchors,
            target,
            kernel,
            m,
            d,
        }
    }

    fn n_vars(&self) -> usize {
        self.m * (self.d + 1)
    }

    fn loss(&self, vars: &[f64]) -> (f64, LossCache) {
        let (m, d) = (self.m, self.d);
        let alpha = &vars[m * d..];
        let n = self.anchors.nrows();
        let mut km = vec![0.0; n * m];
        let mut residual = vec![0.0; n];
        let mut loss = 0.0;
        for (i, a) in self.anchors.axis_iter(Axis(0)).enumerate() {
            let a = a.as_slice().expect("standard layout");
            let row = &mut km[i * m..(i + 1) * m];
            let mut pred = 0.0;
            for k in 0..m {
                let kv = self.kernel.eval(a, &vars[k * d..(k + 1) * d]);
                row[k] = kv;
                pred += kv * alpha[k];
            }
            let r = pred - self.target[i];
            residual[i] = r;
            loss += r * r;
        }
        (loss, LossCache { km, residual })
    }

    fn gradient(&self, vars: &[f64], cache: &LossCache) -> Vec<f64> {
        let (m, d) = (self.m, self.d);
        let alpha = &vars[m * d..];
        let mut g = vec![0.0; self.n_vars()];
        let mut kg = vec![0.0; d];
        for (i, a) in self.anchors.axis_iter(Axis(0)).enumerate() {
            let a = a.as_slice().expect("standard layout");
            let r = cache.residual[i];
            if r == 0.0 {
                continue;
            }
            let row = &cache.km[i * m..(i + 1) * m];
            for k in 0..m {
                let kv = row[k];
                // ∂L/∂α_k = 2·Σ_i r_i·K_ik
                g[m * d + k] += 2.0 * r * kv;
                if alpha[k] == 0.0 {
                    continue;
                }
                let z = &vars[k * d..(k + 1) * d];
                self.kernel.grad_z_with_value(a, z, kv, &mut kg);
                let s = 2.0 * r * alpha[k];
                for (gj, kgj) in g[k * d..(k + 1) * d].iter_mut().zip(&kg) {
                    *gj += s * kgj;
                }
            }
        }
        g
    }
}

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    MaxIterations,
    LossTolerance,
    GradientTolerance,
    /// Armijo backtracking ran out; the current point is returned.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct GsvOutcome {
    pub model: CompressedModel,
    /// Loss at the start and after every accepted step.
    pub losses: Vec<f64>,
    pub termination: Termination,
}

impl GsvOutcome {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().unwrap()
    }
}

/// Optimizes a LARS-SVM initialization into gradient support vectors.
pub fn optimize(init: &LarsSvm, source: &SvmModel, cfg: &GsvConfig) -> Result<CompressedModel> {
    Ok(optimize_traced(init, source, cfg)?.model)
}

/// [`optimize`] plus the loss trace and stopping reason.
pub fn optimize_traced(init: &LarsSvm, source: &SvmModel, cfg: &GsvConfig) -> Result<GsvOutcome> {
    cfg.validate()?;
    if init.kernel != *source.kernel() {
        return Err(CvmError::invalid("initialization and source model use different kernels"));
    }
    if init.support_vectors.ncols() != source.dim() {
        return Err(CvmError::Dimension {
            expected: source.dim(),
            got: init.support_vectors.ncols(),
        });
    }
    let anchors = match &cfg.anchors {
        Anchors::SupportVectors => source.support_vectors().clone(),
        Anchors::Points(p) => {
            if p.ncols() != source.dim() {
                return Err(CvmError::Dimension {
                    expected: source.dim(),
                    got: p.ncols(),
                });
            }
            p.clone()
        }
    };
    let target: Vec<f64> = anchors
        .axis_iter(Axis(0))
        .map(|a| source.decision_value(&a.to_vec()).map(|f| f - source.bias()))
        .collect::<Result<_>>()?;

    let m = init.n_sv();
    let d = source.dim();
    let obj = Objective::new(anchors, target, &init.kernel, m);
    let start = pack(&init.support_vectors, &init.coef);
    let (vars, losses, termination) = minimize(&obj, start, cfg)?;

    let svs = Array2::from_shape_vec((m, d), vars[..m * d].to_vec()).expect("shape");
    let coef = vars[m * d..].to_vec();
    let iterations = losses.len() - 1;
    info!(
        "gsv: m={m} iterations={iterations} loss {:.6e} -> {:.6e} ({termination:?})",
        losses[0],
        losses[iterations]
    );
    Ok(GsvOutcome {
        model: CompressedModel {
            support_vectors: svs,
            coef,
            bias: init.bias,
            kernel: init.kernel,
            class_pair: init.class_pair,
            provenance: Provenance {
                source_digest: model_digest(source),
                iterations,
            },
        },
        losses,
        termination,
    })
}

fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 1.0;
    }
    let r = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    if r > 0.0 && r.is_finite() {
        r
    } else {
        1.0
    }
}

/// `1/√h` per variable, `h` the Gauss-Newton diagonal `Σ_i (∂pred_i/∂v)²`
/// at `vars`, floored per block at 1% of the block mean.
fn jacobi_scale<K: Kernel>(obj: &Objective<K>, vars: &[f64], cache: &LossCache) -> Option<Vec<f64>> {
    let (m, d) = (obj.m, obj.d);
    let alpha = &vars[m * d..];
    let mut h = vec![0.0; obj.n_vars()];
    let mut kg = vec![0.0; d];
    for (i, a) in obj.anchors.axis_iter(Axis(0)).enumerate() {
        let a = a.as_slice().expect("standard layout");
        let row = &cache.km[i * m..(i + 1) * m];
        for k in 0..m {
            h[m * d + k] += row[k] * row[k];
            obj.kernel.grad_z_with_value(a, &vars[k * d..(k + 1) * d], row[k], &mut kg);
            for j in 0..d {
                let v = alpha[k] * kg[j];
                h[k * d + j] += v * v;
            }
        }
    }
    let mut out = vec![0.0; h.len()];
    for (lo, hi) in [(0, m * d), (m * d, h.len())] {
        let mean = h[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        if !(mean > 0.0 && mean.is_finite()) {
            return None;
        }
        for v in lo..hi {
            out[v] = 1.0 / h[v].max(1e-2 * mean).sqrt();
        }
    }
    Some(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned PR+ nonlinear CG. Returns the final point in original
/// coordinates, the accepted-loss trace and the stopping reason.
fn minimize<K: Kernel>(obj: &Objective<K>, start: Vec<f64>, cfg: &GsvConfig) -> Result<(Vec<f64>, Vec<f64>, Termination)> {
    let (m, d) = (obj.m, obj.d);
    let nx = m * d;
    let n = obj.n_vars();
    let mut x = start;
    let (mut loss, mut cache) = obj.loss(&x);
    if !loss.is_finite() {
        return Err(CvmError::NonFinite {
            what: "loss",
            iteration: 0,
        });
    }

    // x = scale ⊙ z, with the Gauss-Newton diagonal at the start point. A
    // coordinate's scale is capped at the coordinates' RMS: it grows like
    // 1/|α_k| as its coefficient vanishes.
    let sx = rms(&x[..nx]);
    let scale: Vec<f64> = match jacobi_scale(obj, &x, &cache) {
        Some(mut s) => {
            for v in &mut s[..nx] {
                *v = v.min(sx);
            }
            s
        }
        None => {
            // A block with an all-zero diagonal (every coefficient zero, or
            // every SV far from all anchors): per-block RMS, with the
            // coefficient scale at which one column moves the prediction by
            // about the target.
            let col_rms = (cache.km.iter().map(|v| v * v).sum::<f64>() / m.max(1) as f64).sqrt();
            let t_norm = dot(&obj.target, &obj.target).sqrt();
            let a_floor = if col_rms > 0.0 { t_norm / col_rms } else { 0.0 };
            let sa = rms(&x[nx..]).max(a_floor);
            (0..n).map(|i| if i < nx { sx } else { sa }).collect()
        }
    };
    let to_x = |z: &[f64]| -> Vec<f64> { z.iter().zip(&scale).map(|(a, s)| a * s).collect() };
    let mut losses = vec![loss];
    if cfg.max_iters == 0 {
        return Ok((x, losses, Termination::MaxIterations));
    }
    let mut z: Vec<f64> = x.iter().zip(&scale).map(|(a, s)| a / s).collect();
    let grad_z = |x: &[f64], cache: &LossCache| -> Vec<f64> {
        obj.gradient(x, cache).iter().zip(&scale).map(|(g, s)| g * s).collect()
    };
    let mut g = grad_z(&x, &cache);
    let gtol = cfg.grad_tol * (1.0 + loss);
    let restart = cfg.cg_restart_period.unwrap_or(10 * n);
    let ls = cfg.line_search;

    let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut prev_step: Option<(f64, f64)> = None; // (step, slope) of the last accepted move
    let mut since_restart = 0usize;
    let mut termination = Termination::MaxIterations;

    for iter in 0..cfg.max_iters {
        let gnorm = dot(&g, &g).sqrt();
        if !gnorm.is_finite() {
            return Err(CvmError::NonFinite {
                what: "gradient",
                iteration: iter,
            });
        }
        if gnorm <= gtol {
            termination = Termination::GradientTolerance;
            break;
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            since_restart = 0;
        }
        let dmax = dir.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut step = match prev_step {
            Some((s, prev_slope)) => (s * prev_slope / slope).min(1e3 * s),
            None => 0.1 / dmax.max(1e-300),
        };
        if !(step.is_finite() && step > 0.0) {
            step = 0.1 / dmax.max(1e-300);
        }

        let mut accepted = None;
        let mut tried_steepest = since_restart == 0;
        loop {
            let mut found = false;
            for _ in 0..=ls.max_backtracks {
                let zt: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                let xt = to_x(&zt);
                let (lt, ct) = obj.loss(&xt);
                if lt.is_finite() && lt <= loss + ls.armijo * step * slope {
                    accepted = Some((zt, xt, lt, ct));
                    found = true;
                    break;
                }
                step *= ls.backtrack;
            }
            if found || tried_steepest {
                break;
            }
            // Retry once along steepest descent.
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            step = 0.1 / dir.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
            since_restart = 0;
            tried_steepest = true;
        }
        let Some((zt, xt, lt, ct)) = accepted else {
            termination = Termination::LineSearchFailed;
            debug!("gsv: line search failed at iteration {iter}");
            break;
        };

        let rel_drop = (loss - lt) / loss.max(f64::MIN_POSITIVE);
        z = zt;
        x = xt;
        loss = lt;
        cache = ct;
        losses.push(loss);
        prev_step = Some((step, slope));

        let g_new = grad_z(&x, &cache);
        since_restart += 1;
        let beta = if since_restart >= restart {
            since_restart = 0;
            0.0
        } else {
            let gg = dot(&g, &g);
            let num = g_new.iter().zip(&g).map(|(a, b)| a * (a - b)).sum::<f64>();
            (num / gg).max(0.0)
        };
        dir = g_new.iter().zip(&dir).map(|(gn, dv)| -gn + beta * dv).collect();
        g = g_new;

        if iter % 256 == 0 {
            debug!("gsv iter {iter}: loss {loss:.6e} |g| {gnorm:.3e} step {step:.3e}");
        }
        if rel_drop < cfg.loss_rel_tol {
            termination = Termination::LossTolerance;
            break;
        }
    }
    Ok((x, losses, termination))
}

/// LARS-SVM selection followed by gradient-support-vector optimization.
/// With `gsv = None` the LARS-SVM model is returned as is.
pub fn compress_model(
    model: &SvmModel,
    labels: &[f64],
    budget: &CostBudget,
    eig_floor: f64,
    gsv: Option<&GsvConfig>,
) -> Result<CompressedModel> {
    let init = select_support_vectors(model, labels, budget, eig_floor)?;
    match gsv {
        None => Ok(CompressedModel::from_lars(&init, model)),
        Some(cfg) => optimize(&init, model, cfg),
    }
}

/// Compresses every pair model of a one-vs-one ensemble to the same budget
/// (or to its own support-vector count, if smaller). Support-vector targets
/// come from `train` when given, otherwise from coefficient signs.
pub fn compress_multiclass(
    model: &MultiClassModel,
    train: Option<&Dataset>,
    budget: &CostBudget,
    eig_floor: f64,
    gsv: Option<&GsvConfig>,
) -> Result<MultiClassModel> {
    use rayon::prelude::*;
    let pairs = model
        .pairs()
        .par_iter()
        .map(|pair| {
            let labels = match train {
                Some(ds) => support_vector_labels(pair, ds)?,
                None => pair.sv_signs(),
            };
            let m = budget.max_sv().min(pair.n_sv());
            let b = CostBudget::new(m as f64 * budget.per_kernel_cost(), budget.per_kernel_cost())?;
            compress_model(pair, &labels, &b, eig_floor, gsv).map(|c| c.to_model())
        })
        .collect::<Result<Vec<_>>>()?;
    MultiClassModel::new(model.classes().to_vec(), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kp() -> KernelParams {
        KernelParams::new(1.0).unwrap()
    }

    fn brute_loss(svs: &Array2<f64>, alpha: &[f64], anchors: &Array2<f64>, t: &[f64], k: &KernelParams) -> f64 {
        let mut loss = 0.0;
        for i in 0..anchors.nrows() {
            let mut p = 0.0;
            for j in 0..svs.nrows() {
                let mut d2 = 0.0;
                for c in 0..svs.ncols() {
                    d2 += (anchors[[i, c]] - svs[[j, c]]).powi(2);
                }
                p += alpha[j] * (-d2 / (2.0 * k.sigma() * k.sigma())).exp();
            }
            loss += (p - t[i]).powi(2);
        }
        loss
    }

    #[test]
    fn exact_representation_has_zero_loss_and_gradient() {
        let sv = array![[0.0, 0.0], [1.0, 0.5], [-1.0, 2.0]];
        let alpha = [0.7, -1.2, 0.4];
        let k = kp();
        let src = SvmModel::new(sv.clone(), alpha.to_vec(), 0.3, k, None, (-1, 1)).unwrap();
        let t: Vec<f64> = (0..3)
            .map(|i| src.decision_value(&sv.row(i).to_vec()).unwrap() - 0.3)
            .collect();
        let l = cvm_loss(sv.view(), &alpha, sv.view(), &t, &k).unwrap();
        assert!(l < 1e-28);
        let (gx, ga) = cvm_grad(sv.view(), &alpha, sv.view(), &t, &k).unwrap();
        assert!(gx.iter().chain(ga.iter()).all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn zero_alpha_gives_target_norm() {
        let sv = array![[0.0], [1.0]];
        let anchors = array![[0.5], [2.0], [3.0]];
        let t = [1.0, -2.0, 0.5];
        let l = cvm_loss(sv.view(), &[0.0, 0.0], anchors.view(), &t, &kp()).unwrap();
        assert_eq!(l, 1.0 + 4.0 + 0.25);
        let (gx, _) = cvm_grad(sv.view(), &[0.0, 1.0], anchors.view(), &t, &kp()).unwrap();
        assert_eq!(gx.row(0).to_vec(), vec![0.0]);
    }

    #[test]
    fn loss_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let (n, m, d) = (rng.gen_range(3..15), rng.gen_range(1..5), rng.gen_range(1..4));
            let anchors = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
            let svs = Array2::from_shape_fn((m, d), |_| rng.gen_range(-2.0..2.0));
            let alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let k = KernelParams::new(rng.gen_range(0.5..2.0)).unwrap();
            let fast = cvm_loss(svs.view(), &alpha, anchors.view(), &t, &k).unwrap();
            let slow = brute_loss(&svs, &alpha, &anchors, &t, &k);
            assert!((fast - slow).abs() <= 1e-10 * slow.abs().max(1e-300));
        }
    }

    #[test]
    fn shape_errors() {
        let sv = array![[0.0, 1.0]];
        let anchors = array![[0.0]];
        assert!(cvm_loss(sv.view(), &[1.0], anchors.view(), &[0.0], &kp()).is_err());
        assert!(cvm_loss(sv.view(), &[1.0, 2.0], sv.view(), &[0.0], &kp()).is_err());
        assert!(cvm_grad(sv.view(), &[1.0], sv.view(), &[0.0, 1.0], &kp()).is_err());
    }

    #[test]
    fn compressed_model_predicts_like_svm() {
        let cm = CompressedModel {
            support_vectors: array![[0.0, 1.0], [2.0, 0.0]],
            coef: vec![0.5, -1.5],
            bias: 0.2,
            kernel: kp(),
            class_pair: (-1, 1),
            provenance: Provenance {
                source_digest: String::new(),
                iterations: 3,
            },
        };
        let m = cm.to_model();
        for x in [[0.0, 0.0], [1.0, 1.0], [3.0, -1.0]] {
            let want = 0.5 * kp().eval(&[0.0, 1.0], &x) - 1.5 * kp().eval(&[2.0, 0.0], &x) + 0.2;
            assert!((cm.decision_value(&x).unwrap() - want).abs() < 1e-15);
            assert_eq!(m.decision_value(&x).unwrap(), cm.decision_value(&x).unwrap());
        }
    }

    #[test]
    fn recovers_from_vanishing_coefficients() {
        let sv = array![[0.0, 0.0], [3.0, 0.0], [1.5, 2.5]];
        let src = SvmModel::new(sv.clone(), vec![1.0, -1.0, 0.5], 0.0, kp(), None, (-1, 1)).unwrap();
        let init = LarsSvm {
            support_vectors: sv,
            coef: vec![1e-9, -1e-9, 1e-9],
            bias: 0.0,
            kernel: kp(),
            class_pair: (-1, 1),
            sv_indices: vec![0, 1, 2],
            path: crate::compress::LarsPath {
                steps: Vec::new(),
                budget: 3,
                truncated: false,
            },
        };
        let out = optimize_traced(&init, &src, &GsvConfig::with_iters(200)).unwrap();
        assert!(out.final_loss() < 1e-3 * out.initial_loss(), "{:?} {:?}", out.termination, &out.losses[..10]);
    }

    #[test]
    fn config_validation() {
        let mut c = GsvConfig::default();
        c.line_search.armijo = 1.5;
        assert!(c.validate().is_err());
        let mut c = GsvConfig::default();
        c.cg_restart_period = Some(0);
        assert!(c.validate().is_err());
        assert!(GsvConfig::default().validate().is_ok());
    }
}

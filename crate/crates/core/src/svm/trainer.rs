//! Squared-hinge kernel SVM trainer.
//!
//! Minimizes over coefficients `a` and bias `b`
//!
//! ```text
//! F(a, b) = C·Σ_i w_i·max(0, 1 − y_i·f_i)² + aᵀKa,    f = K·a + b
//! ```
//!
//! with a damped Newton method. For a fixed set `A` of margin violators the
//! objective is quadratic and its minimizer solves
//!
//! ```text
//! (K_AA + diag(1/(C·w_A)))·a_A + b·1 = y_A,    1ᵀa_A = 0,    a_i = 0 for i ∉ A
//! ```
//!
//! Each iteration jumps towards that point and takes the exact minimizer of
//! the piecewise-quadratic objective along the segment, so the objective
//! never increases. Only kernel columns of current violators are ever
//! computed; for large problems the iteration is warm-started from a
//! solution on a deterministic half-size subsample.

use log::debug;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::SvmModel;
use crate::data::Dataset;
use crate::error::{CvmError, Result};
use crate::kernel::{Kernel, KernelParams};
use crate::linalg::Cholesky;

/// Problems larger than this start from a subsample solution.
const WARM_START_MIN: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub c_param: f64,
    pub kernel: KernelParams,
    pub max_newton_iters: usize,
    /// Stop once `‖∇F‖₂ ≤ grad_tol · 2C·Σw` (the loss-gradient scale).
    pub grad_tol: f64,
    /// Coefficients with `|a_i| ≤ alpha_prune_tol · max|a|` are dropped.
    pub alpha_prune_tol: f64,
}

impl TrainConfig {
    pub fn new(c_param: f64, kernel: KernelParams) -> Self {
        TrainConfig {
            c_param,
            kernel,
            max_newton_iters: 100,
            grad_tol: 1e-9,
            alpha_prune_tol: 1e-8,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c_param > 0.0 && self.c_param.is_finite()) {
            return Err(CvmError::invalid(format!("C must be positive, got {}", self.c_param)));
        }
        if self.max_newton_iters == 0 {
            return Err(CvmError::invalid("max_newton_iters must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(CvmError::invalid("grad_tol must be positive"));
        }
        if !(self.alpha_prune_tol >= 0.0) {
            return Err(CvmError::invalid("alpha_prune_tol must be nonnegative"));
        }
        Ok(())
    }
}

/// Everything the trainer knows about its solution.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: SvmModel,
    /// Coefficient per training sample; pruned entries are zero.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    /// Objective after each iteration, starting with the initial point.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// Trains a binary SVM. The smaller label becomes the negative class.
pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<SvmModel> {
    Ok(train_detailed(ds, None, cfg)?.model)
}

/// Trains with optional positive per-sample loss weights.
pub fn train_detailed(ds: &Dataset, weights: Option<&[f64]>, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let classes = ds.classes();
    if classes.len() != 2 {
        return Err(CvmError::invalid(format!(
            "binary training needs exactly two classes, found {}",
            classes.len()
        )));
    }
    let (neg, pos) = (classes[0], classes[1]);
    let n = ds.len();
    let w = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(CvmError::Dimension { expected: n, got: w.len() });
            }
            if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(CvmError::invalid("sample weights must be positive and finite"));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let x: Vec<Vec<f64>> = ds.samples().iter().map(|s| s.features.clone()).collect();
    let y: Vec<f64> = ds
        .samples()
        .iter()
        .map(|s| if s.label == pos { 1.0 } else { -1.0 })
        .collect();

    let mut problem = Problem::new(&x, &y, &w, cfg);
    let start = problem.warm_start(0)?;
    let mut sol = problem.solve(start)?;

    let max_abs = sol.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = cfg.alpha_prune_tol * max_abs;
    let keep: Vec<usize> = (0..n).filter(|&i| sol.a[i].abs() > cut && sol.a[i] != 0.0).collect();
    if keep.is_empty() {
        return Err(CvmError::Numerical("training produced no support vectors".into()));
    }
    let d = ds.dim();
    let mut sv = Array2::zeros((keep.len(), d));
    for (r, &i) in keep.iter().enumerate() {
        for j in 0..d {
            sv[[r, j]] = x[i][j];
        }
    }
    let coef = keep.iter().map(|&i| sol.a[i]).collect();
    for a in sol.a.iter_mut() {
        if a.abs() <= cut {
            *a = 0.0;
        }
    }
    let model = SvmModel::new(sv, coef, sol.b, cfg.kernel, Some(cfg.c_param), (neg, pos))?;
    debug!(
        "trained: n={n} n_sv={} objective={:.6e} iterations={} |grad|={:.3e}",
        model.coef().len(),
        sol.objective,
        sol.iterations,
        sol.grad_norm
    );
    Ok(TrainReport {
        model,
        coefficients: sol.a,
        bias: sol.b,
        objective: sol.objective,
        objective_history: sol.history,
        iterations: sol.iterations,
        grad_norm: sol.grad_norm,
    })
}

struct Solution {
    a: Vec<f64>,
    b: f64,
    objective: f64,
    history: Vec<f64>,
    iterations: usize,
    grad_norm: f64,
}

struct Problem<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    cfg: &'a TrainConfig,
    cols: Vec<Option<Vec<f64>>>,
}

impl<'a> Problem<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], w: &'a [f64], cfg: &'a TrainConfig) -> Self {
        Problem {
            x,
            y,
            w,
            cfg,
            cols: vec![None; x.len()],
        }
    }

    fn n(&self) -> usize {
        self.x.len()
    }

    /// Kernel column `K[:, j]`, cached.
    fn col(&mut self, j: usize) -> &[f64] {
        if self.cols[j].is_none() {
            let k = &self.cfg.kernel;
            let xj = &self.x[j];
            let c: Vec<f64> = self.x.iter().map(|xi| k.eval(xi, xj)).collect();
            self.cols[j] = Some(c);
        }
        self.cols[j].as_deref().unwrap()
    }

    /// `K·v + shift` for a vector `v` with the given support.
    fn kernel_mul(&mut self, v: &[f64], support: &[usize], shift: f64) -> Vec<f64> {
        let mut out = vec![shift; self.n()];
        for &j in support {
            let vj = v[j];
            if vj == 0.0 {
                continue;
            }
            let col = self.col(j);
            for (o, &k) in out.iter_mut().zip(col) {
                *o += vj * k;
            }
        }
        out
    }

    /// Initial `(a, b)`: zeros, or the solution of a half-size subsample.
    fn warm_start(&mut self, depth: usize) -> Result<(Vec<f64>, f64)> {
        let n = self.n();
        if n <= WARM_START_MIN {
            return Ok((vec![0.0; n], 0.0));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(depth as u64));
        let mut sub: Vec<usize> = order[..n / 2].to_vec();
        sub.sort_unstable();
        let has_pos = sub.iter().any(|&i| self.y[i] > 0.0);
        let has_neg = sub.iter().any(|&i| self.y[i] < 0.0);
        if !(has_pos && has_neg) {
            return Ok((vec![0.0; n], 0.0));
        }
        let xs: Vec<Vec<f64>> = sub.iter().map(|&i| self.x[i].clone()).collect();
        let ys: Vec<f64> = sub.iter().map(|&i| self.y[i]).collect();
        let ws: Vec<f64> = sub.iter().map(|&i| self.w[i]).collect();
        let mut inner = Problem::new(&xs, &ys, &ws, self.cfg);
        let start = inner.warm_start(depth + 1)?;
        let sol = inner.solve(start)?;
        let mut a = vec![0.0; n];
        for (k, &i) in sub.iter().enumerate() {
            a[i] = sol.a[k];
        }
        debug!("warm start from {} of {} samples", sub.len(), n);
        Ok((a, sol.b))
    }

    fn objective(&self, a: &[f64], b: f64, f: &[f64]) -> f64 {
        let c = self.cfg.c_param;
        let mut loss = 0.0;
        let mut reg = 0.0;
        for i in 0..self.n() {
            let h = 1.0 - self.y[i] * f[i];
            if h > 0.0 {
                loss += self.w[i] * h * h;
            }
            // (K a)_i = f_i − b
            reg += a[i] * (f[i] - b);
        }
        c * loss + reg
    }

    fn grad_norm(&mut self, a: &[f64], f: &[f64]) -> f64 {
        let c = self.cfg.c_param;
        let n = self.n();
        // ∇_a = 2K·v with v = C·w·(f − y) on violators, plus a.
        let mut v = a.to_vec();
        let mut gb = 0.0;
        for i in 0..n {
            if self.y[i] * f[i] < 1.0 {
                let r = c * self.w[i] * (f[i] - self.y[i]);
                v[i] += r;
                gb += r;
            }
        }
        let support: Vec<usize> = (0..n).filter(|&i| v[i] != 0.0).collect();
        let kv = self.kernel_mul(&v, &support, 0.0);
        let sq: f64 = kv.iter().map(|g| 4.0 * g * g).sum();
        (sq + 4.0 * gb * gb).sqrt()
    }

    fn solve(&mut self, (mut a, mut b): (Vec<f64>, f64)) -> Result<Solution> {
        let n = self.n();
        let c = self.cfg.c_param;
        let support: Vec<usize> = (0..n).filter(|&i| a[i] != 0.0).collect();
        let mut f = self.kernel_mul(&a, &support, b);
        let mut obj = self.objective(&a, b, &f);
        let mut history = vec![obj];
        let tol = self.cfg.grad_tol * 2.0 * c * self.w.iter().sum::<f64>();
        let mut grad = self.grad_norm(&a, &f);

        for iter in 0..self.cfg.max_newton_iters {
            if grad <= tol {
                return Ok(Solution {
                    a,
                    b,
                    objective: obj,
                    history,
                    iterations: iter,
                    grad_norm: grad,
                });
            }
            let active: Vec<usize> = (0..n).filter(|&i| self.y[i] * f[i] < 1.0).collect();
            if active.is_empty() {
                return Err(CvmError::Numerical("no margin violators but gradient is nonzero".into()));
            }
            let (a_new, b_new) = self.newton_point(&active)?;

            let mut da: Vec<f64> = a.iter().map(|v| -v).collect();
            for (k, &i) in active.iter().enumerate() {
                da[i] += a_new[k];
            }
            let touched: Vec<usize> = (0..n).filter(|&i| da[i] != 0.0).collect();
            let db = b_new - b;
            let df = self.kernel_mul(&da, &touched, db);
            let t = self.line_search(&a, &f, &da, db, &df);
            for i in 0..n {
                a[i] += t * da[i];
                f[i] += t * df[i];
            }
            b += t * db;

            let new_obj = self.objective(&a, b, &f);
            if !new_obj.is_finite() {
                return Err(CvmError::NonFinite {
                    what: "objective",
                    iteration: iter,
                });
            }
            obj = new_obj;
            history.push(obj);
            // Refresh scores from scratch to stop drift in f.
            let support: Vec<usize> = (0..n).filter(|&i| a[i] != 0.0).collect();
            f = self.kernel_mul(&a, &support, b);
            grad = self.grad_norm(&a, &f);
            debug!("newton {iter}: |A|={} t={t:.3} F={obj:.9e} |grad|={grad:.3e}", active.len());
        }
        if grad <= tol {
            return Ok(Solution {
                a,
                b,
                objective: obj,
                history,
                iterations: self.cfg.max_newton_iters,
                grad_norm: grad,
            });
        }
        Err(CvmError::NonConvergence {
            iterations: self.cfg.max_newton_iters,
            grad_norm: grad,
        })
    }

    /// Minimizer of the objective with the violator set frozen to `active`.
    fn newton_point(&mut self, active: &[usize]) -> Result<(Vec<f64>, f64)> {
        let m = active.len();
        let c = self.cfg.c_param;
        let mut mat = vec![0.0; m * m];
        for (q, &j) in active.iter().enumerate() {
            let w_j = self.w[j];
            let col = self.col(j);
            let dst = &mut mat[q * m..(q + 1) * m];
            for (p, &i) in active.iter().enumerate() {
                dst[p] = col[i];
            }
            dst[q] += 1.0 / (c * w_j);
        }
        let chol = Cholesky::from_col_major(m, mat)?;
        let ya: Vec<f64> = active.iter().map(|&i| self.y[i]).collect();
        let u = chol.solve(&ya)?;
        let v = chol.solve(&vec![1.0; m])?;
        let su: f64 = u.iter().sum();
        let sv: f64 = v.iter().sum();
        if !(sv > 0.0) {
            return Err(CvmError::Numerical("degenerate bias equation".into()));
        }
        let b = su / sv;
        let a = u.iter().zip(&v).map(|(ui, vi)| ui - b * vi).collect();
        Ok((a, b))
    }

    /// Exact minimizer over `t ≥ 0` of the objective along `(da, db)`.
    fn line_search(&self, a: &[f64], f: &[f64], da: &[f64], db: f64, df: &[f64]) -> f64 {
        let c = self.cfg.c_param;
        // Regularizer along the line: r0 + 2t·r1 + t²·r2.
        let mut r1 = 0.0;
        let mut r2 = 0.0;
        for i in 0..self.n() {
            let kda = df[i] - db;
            r1 += a[i] * kda;
            r2 += da[i] * kda;
        }
        let slope = |t: f64| -> (f64, f64) {
            let mut d1 = 2.0 * r1 + 2.0 * t * r2;
            let mut d2 = 2.0 * r2;
            for i in 0..self.n() {
                let yd = self.y[i] * df[i];
                let h = 1.0 - self.y[i] * f[i] - t * yd;
                if h > 0.0 {
                    d1 -= 2.0 * c * self.w[i] * yd * h;
                    d2 += 2.0 * c * self.w[i] * yd * yd;
                }
            }
            (d1, d2)
        };
        let (d0, _) = slope(0.0);
        if d0 >= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        let mut guard = 0;
        while slope(hi).0 < 0.0 && guard < 60 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        let mut t = hi.min(1.0);
        for _ in 0..200 {
            let (d1, d2) = slope(t);
            if d1 == 0.0 {
                return t;
            }
            if d1 < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
            // Newton on the piecewise-linear derivative, bisection fallback.
            let cand = if d2 > 0.0 { t - d1 / d2 } else { f64::NAN };
            t = if cand > lo && cand < hi { cand } else { 0.5 * (lo + hi) };
        }
        // Prefer the side with nonpositive slope: objective there is no
        // larger than at `lo`.
        if slope(t).0 <= 0.0 {
            t
        } else {
            lo
        }
    }
}

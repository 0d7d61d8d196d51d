//! Least angle regression on `min_a ‖Ωa + β‖²`.
//!
//! Plain LARS without the lasso drop rule: every step activates exactly one
//! coefficient and coefficients never leave the active set. Correlations are
//! `c = Ωᵀ(−β − Ωa)`, unnormalized. Each step moves along the direction that
//! keeps all active correlations equal in magnitude, until an inactive
//! column reaches the same magnitude.

use log::debug;
use ndarray::{Array1, Array2};

use super::surrogate::LarsProblem;
use crate::error::{CvmError, Result};

/// Relative pivot below which a new column is numerically dependent on the
/// active ones.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LarsStep {
    /// Column activated at this step.
    pub activated: usize,
    /// Coefficients after the step; exactly `t` nonzeros at step `t`.
    pub coefficients: Vec<f64>,
    /// Common absolute correlation of the active set after the step.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LarsPath {
    pub steps: Vec<LarsStep>,
    /// Requested number of steps.
    pub budget: usize,
    /// Set when the path stopped before `budget` steps.
    pub truncated: bool,
}

impl LarsPath {
    /// Activated columns in activation order.
    pub fn active_set(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.activated).collect()
    }

    /// First `t` steps of the path.
    pub fn truncate(&self, t: usize) -> LarsPath {
        LarsPath {
            steps: self.steps[..t.min(self.steps.len())].to_vec(),
            budget: t,
            truncated: t > self.steps.len(),
        }
    }
}

/// Runs `m` LARS steps.
pub fn lars_select(p: &LarsProblem, m: usize) -> Result<LarsPath> {
    let n = p.n_features();
    if m == 0 || m > n {
        return Err(CvmError::invalid(format!("LARS budget must be in 1..={n}, got {m}")));
    }
    let gram = crate::linalg::gram(p.omega.view());
    // Correlations at a = 0: Ωᵀ(−β).
    let c0: Array1<f64> = -p.omega.t().dot(&p.beta);

    let mut coef = vec![0.0; n];
    let mut active: Vec<usize> = Vec::with_capacity(m);
    let mut in_active = vec![false; n];
    let mut signs: Vec<f64> = Vec::with_capacity(m);
    // Lower Cholesky factor of G_AA, row by row.
    let mut chol: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut steps = Vec::with_capacity(m);
    let mut truncated = false;

    let mut corr = c0.to_vec();
    let first = argmax_abs(&corr, &in_active);
    let Some(first) = first else {
        return Ok(LarsPath {
            steps,
            budget: m,
            truncated: true,
        });
    };
    if !add_column(&gram, &mut chol, &active, first) {
        return Err(CvmError::Numerical("first LARS column has zero norm".into()));
    }
    active.push(first);
    in_active[first] = true;
    signs.push(corr[first].signum());

    loop {
        let t = active.len();
        let c_max = corr[active[0]].abs();
        let w = chol_solve(&chol, &signs);
        // u = G[:, A]·w
        let mut u = vec![0.0; n];
        for (k, &j) in active.iter().enumerate() {
            let wk = w[k];
            let col = gram.column(j);
            for (ui, &g) in u.iter_mut().zip(col.iter()) {
                *ui += wk * g;
            }
        }
        let mut gamma = c_max;
        let mut next: Option<usize> = None;
        if t < n {
            for j in 0..n {
                if in_active[j] {
                    continue;
                }
                for cand in [(c_max - corr[j]) / (1.0 - u[j]), (c_max + corr[j]) / (1.0 + u[j])] {
                    if cand > 1e-14 * c_max && cand < gamma {
                        gamma = cand;
                        next = Some(j);
                    }
                }
            }
        }
        for (k, &j) in active.iter().enumerate() {
            coef[j] += gamma * w[k];
        }
        // Recompute correlations from the coefficients to avoid drift.
        corr = correlations(&gram, &c0, &coef, &active);
        steps.push(LarsStep {
            activated: active[t - 1],
            coefficients: coef.clone(),
            correlation: corr[active[0]].abs(),
        });
        debug!("lars step {t}: activated {} gamma {gamma:.3e}", active[t - 1]);
        if t == m {
            break;
        }
        let Some(j) = next else {
            // Residual is orthogonal to every column.
            truncated = true;
            break;
        };
        if !add_column(&gram, &mut chol, &active, j) {
            truncated = true;
            break;
        }
        active.push(j);
        in_active[j] = true;
        signs.push(corr[j].signum());
    }
    Ok(LarsPath {
        steps,
        budget: m,
        truncated,
    })
}

fn correlations(gram: &Array2<f64>, c0: &Array1<f64>, coef: &[f64], active: &[usize]) -> Vec<f64> {
    let mut c = c0.to_vec();
    for &j in active {
        let a = coef[j];
        for (ci, &g) in c.iter_mut().zip(gram.column(j).iter()) {
            *ci -= a * g;
        }
    }
    c
}

/// Largest `|c_j|` over inactive columns; ties go to the lowest index.
fn argmax_abs(c: &[f64], skip: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &v) in c.iter().enumerate() {
        if skip[j] {
            continue;
        }
        if best.map_or(true, |b| v.abs() > c[b].abs()) {
            best = Some(j);
        }
    }
    best.filter(|&b| c[b] != 0.0)
}

/// Extends the Cholesky factor of `G_AA` by column `j`. Returns false if `j`
/// is numerically dependent on the active set.
fn add_column(gram: &Array2<f64>, chol: &mut Vec<Vec<f64>>, active: &[usize], j: usize) -> bool {
    let k = active.len();
    let g: Vec<f64> = active.iter().map(|&i| gram[[i, j]]).collect();
    // Forward substitution L·l = g.
    let mut l = vec![0.0; k];
    for r in 0..k {
        let mut s = g[r];
        for q in 0..r {
            s -= chol[r][q] * l[q];
        }
        l[r] = s / chol[r][r];
    }
    let gjj = gram[[j, j]];
    let d2 = gjj - l.iter().map(|v| v * v).sum::<f64>();
    if !(d2 > RANK_TOL * gjj.abs()) {
        return false;
    }
    l.push(d2.sqrt());
    chol.push(l);
    true
}

/// Solves `L·Lᵀ·x = b`.
fn chol_solve(chol: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = b.len();
    let mut z = vec![0.0; k];
    for r in 0..k {
        let mut s = b[r];
        for q in 0..r {
            s -= chol[r][q] * z[q];
        }
        z[r] = s / chol[r][r];
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let mut s = z[r];
        for q in r + 1..k {
            s -= chol[q][r] * x[q];
        }
        x[r] = s / chol[r][r];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn problem(omega: Array2<f64>, beta: Array1<f64>) -> LarsProblem {
        LarsProblem::from_design(omega, beta).unwrap()
    }

    #[test]
    fn first_step_takes_largest_correlation() {
        let omega = array![[1.0, 0.2, 0.0], [0.0, 1.0, 0.3], [0.1, 0.0, 1.0]];
        let beta = array![-0.5, -2.0, 1.0];
        let p = problem(omega.clone(), beta.clone());
        let path = lars_select(&p, 1).unwrap();
        let c = -omega.t().dot(&beta);
        let want = (0..3).max_by(|&a, &b| c[a].abs().partial_cmp(&c[b].abs()).unwrap()).unwrap();
        assert_eq!(path.steps[0].activated, want);
        assert_eq!(path.steps[0].coefficients.iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn budget_out_of_range() {
        let p = problem(Array2::eye(2), array![1.0, 2.0]);
        assert!(lars_select(&p, 0).is_err());
        assert!(lars_select(&p, 3).is_err());
    }

    #[test]
    fn orthonormal_design_orders_by_correlation() {
        let p = problem(Array2::eye(4), array![0.3, -2.0, 1.1, -0.7]);
        let path = lars_select(&p, 4).unwrap();
        assert_eq!(path.active_set(), vec![1, 2, 3, 0]);
        // Full path reaches a = −β.
        let last = &path.steps[3].coefficients;
        for (a, b) in last.iter().zip(p.beta.iter()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let p = problem(Array2::eye(3), array![-1.0, 1.0, -1.0]);
        let path = lars_select(&p, 1).unwrap();
        assert_eq!(path.steps[0].activated, 0);
    }

    #[test]
    fn dependent_columns_truncate() {
        // Columns 0 and 1 are identical.
        let omega = array![[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        let p = problem(omega, array![-3.0, -1.0, 0.0]);
        let path = lars_select(&p, 3).unwrap();
        assert!(path.truncated);
        assert!(path.steps.len() < 3);
    }

    #[test]
    fn truncate_keeps_prefix() {
        let p = problem(Array2::eye(3), array![3.0, 2.0, 1.0]);
        let path = lars_select(&p, 3).unwrap();
        let short = path.truncate(2);
        assert_eq!(short.steps, path.steps[..2]);
        assert_eq!(short.budget, 2);
    }
}

//! Log-domain Sinkhorn iterations with ε-scaling warm starts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::point::log_sum_exp;

pub const MAX_ITER: usize = 100_000;
pub const MARGINAL_TOL: f64 = 1e-9;
/// Sinkhorn iterations in the final stage before trying Newton steps.
const NEWTON_AFTER: usize = 1_000;
/// Largest number of active atoms for which the dense Newton system is formed.
const NEWTON_MAX_DIM: usize = 1_500;
const NEWTON_STEPS: usize = 100;

pub(crate) struct SinkhornSolution {
    pub plan: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

struct Kernel<'a> {
    cost: &'a [f64],
    m: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    log_a: Vec<f64>,
    log_b: Vec<f64>,
}

impl Kernel<'_> {
    fn update_f(&self, f: &mut [f64], g: &[f64], eps: f64) {
        for (r, &i) in self.rows.iter().enumerate() {
            let lse = log_sum_exp(self.cols.iter().enumerate().map(|(c, &j)| (g[c] - self.cost[i * self.m + j]) / eps));
            f[r] = eps * (self.log_a[r] - lse);
        }
    }

    fn update_g(&self, f: &[f64], g: &mut [f64], eps: f64) {
        for (c, &j) in self.cols.iter().enumerate() {
            let lse = log_sum_exp(self.rows.iter().enumerate().map(|(r, &i)| (f[r] - self.cost[i * self.m + j]) / eps));
            g[c] = eps * (self.log_b[c] - lse);
        }
    }

    fn plan_entry(&self, f: &[f64], g: &[f64], r: usize, c: usize, eps: f64) -> f64 {
        let (i, j) = (self.rows[r], self.cols[c]);
        ((f[r] + g[c] - self.cost[i * self.m + j]) / eps).exp()
    }

    /// Entropic dual `Σ a f + Σ b g − ε Σ P`.
    fn dual(&self, f: &[f64], g: &[f64], eps: f64) -> f64 {
        let lin: f64 = self.log_a.iter().zip(f).map(|(la, v)| la.exp() * v).sum::<f64>()
            + self.log_b.iter().zip(g).map(|(lb, v)| lb.exp() * v).sum::<f64>();
        let mass: f64 = (0..f.len()).flat_map(|r| (0..g.len()).map(move |c| (r, c))).map(|(r, c)| self.plan_entry(f, g, r, c, eps)).sum();
        lin - eps * mass
    }

    /// L¹ violation of both marginals.
    fn full_violation(&self, f: &[f64], g: &[f64], eps: f64) -> f64 {
        let (n, m) = (f.len(), g.len());
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; m];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, col) in cols.iter_mut().enumerate() {
                let p = self.plan_entry(f, g, r, c, eps);
                *row += p;
                *col += p;
            }
        }
        rows.iter().zip(&self.log_a).map(|(s, la)| (s - la.exp()).abs()).sum::<f64>()
            + cols.iter().zip(&self.log_b).map(|(s, lb)| (s - lb.exp()).abs()).sum::<f64>()
    }

    /// Damped Newton ascent on the entropic dual with the last column
    /// potential held fixed. Returns whether both marginals reach `MARGINAL_TOL`.
    fn newton(&self, f: &mut [f64], g: &mut [f64], eps: f64) -> bool {
        let (n, m) = (f.len(), g.len());
        let dim = n + m - 1;
        for _ in 0..NEWTON_STEPS {
            let mut plan = DMatrix::<f64>::zeros(n, m);
            for r in 0..n {
                for c in 0..m {
                    plan[(r, c)] = self.plan_entry(f, g, r, c, eps);
                }
            }
            let rows = plan.column_sum();
            let cols = plan.row_sum();
            let violation: f64 = (0..n).map(|r| (rows[r] - self.log_a[r].exp()).abs()).sum::<f64>()
                + (0..m).map(|c| (cols[c] - self.log_b[c].exp()).abs()).sum::<f64>();
            if violation <= MARGINAL_TOL {
                return true;
            }
            let mut grad = DVector::<f64>::zeros(dim);
            let mut hess = DMatrix::<f64>::zeros(dim, dim);
            for r in 0..n {
                grad[r] = self.log_a[r].exp() - rows[r];
                hess[(r, r)] = rows[r] / eps;
                for c in 0..m - 1 {
                    hess[(r, n + c)] = plan[(r, c)] / eps;
                    hess[(n + c, r)] = plan[(r, c)] / eps;
                }
            }
            for c in 0..m - 1 {
                grad[n + c] = self.log_b[c].exp() - cols[c];
                hess[(n + c, n + c)] = cols[c] / eps;
            }
            let ridge = 1e-14 * hess.diagonal().max();
            for k in 0..dim {
                hess[(k, k)] += ridge;
            }
            let Some(chol) = hess.cholesky() else { return false };
            let step = chol.solve(&grad);
            let slope = grad.dot(&step);
            let current = self.dual(f, g, eps);
            let mut t = 1.0;
            loop {
                let nf: Vec<f64> = (0..n).map(|r| f[r] + t * step[r]).collect();
                let ng: Vec<f64> = (0..m).map(|c| if c + 1 < m { g[c] + t * step[n + c] } else { g[c] }).collect();
                if self.dual(&nf, &ng, eps) >= current + 1e-4 * t * slope || t < 1e-10 {
                    if t < 1e-10 {
                        return self.full_violation(f, g, eps) <= MARGINAL_TOL;
                    }
                    f.copy_from_slice(&nf);
                    g.copy_from_slice(&ng);
                    break;
                }
                t *= 0.5;
            }
        }
        self.full_violation(f, g, eps) <= MARGINAL_TOL
    }

    /// L¹ violation of the row marginals (columns are exact right after a g-update).
    fn row_violation(&self, f: &[f64], g: &[f64], eps: f64) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, &i)| {
                let s: f64 = self
                    .cols
                    .iter()
                    .enumerate()
                    .map(|(c, &j)| ((f[r] + g[c] - self.cost[i * self.m + j]) / eps).exp())
                    .sum();
                (s - self.log_a[r].exp()).abs()
            })
            .sum()
    }
}

pub(crate) fn sinkhorn(a: &[f64], b: &[f64], cost: &[f64], epsilon: f64) -> Result<SinkhornSolution> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Validation(format!("epsilon must be positive, got {epsilon}")));
    }
    let (n, m) = (a.len(), b.len());
    let rows: Vec<usize> = (0..n).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..m).filter(|&j| b[j] > 0.0).collect();
    let kernel = Kernel {
        cost,
        m,
        log_a: rows.iter().map(|&i| a[i].ln()).collect(),
        log_b: cols.iter().map(|&j| b[j].ln()).collect(),
        rows,
        cols,
    };
    let mut f = vec![0.0; kernel.rows.len()];
    let mut g = vec![0.0; kernel.cols.len()];

    // anneal from the cost scale down to the target ε
    let spread = cost.iter().fold(0.0f64, |s, c| s.max(c.abs()));
    let mut stages = vec![epsilon];
    let mut e = epsilon;
    while e < spread {
        e *= 4.0;
        stages.push(e);
    }
    stages.reverse();

    let mut iterations = 0;
    let last = stages.len() - 1;
    for (s, &eps) in stages.iter().enumerate() {
        let tol = if s == last { MARGINAL_TOL } else { 1e-3 };
        let budget = if s == last { MAX_ITER } else { 2_000 };
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for k in 0..budget {
            kernel.update_f(&mut f, &g, eps);
            kernel.update_g(&f, &mut g, eps);
            iterations += 1;
            if k % 10 == 9 || k + 1 == budget {
                residual = kernel.row_violation(&f, &g, eps);
                if residual <= tol {
                    converged = true;
                    break;
                }
            }
            // slow linear convergence (degenerate marginals): polish with Newton steps
            if s == last && k + 1 == NEWTON_AFTER && f.len() + g.len() <= NEWTON_MAX_DIM {
                let (mut nf, mut ng) = (f.clone(), g.clone());
                if kernel.newton(&mut nf, &mut ng, eps) {
                    f = nf;
                    g = ng;
                    residual = kernel.full_violation(&f, &g, eps);
                    converged = true;
                    break;
                }
            }
        }
        if s == last && !converged {
            return Err(Error::Convergence { iterations, residual });
        }
    }

    let mut plan = vec![0.0; n * m];
    for (r, &i) in kernel.rows.iter().enumerate() {
        for (c, &j) in kernel.cols.iter().enumerate() {
            plan[i * m + j] = ((f[r] + g[c] - cost[i * m + j]) / epsilon).exp();
        }
    }
    let mut full_f = vec![f64::NEG_INFINITY; n];
    let mut full_g = vec![f64::NEG_INFINITY; m];
    kernel.rows.iter().zip(&f).for_each(|(&i, &v)| full_f[i] = v);
    kernel.cols.iter().zip(&g).for_each(|(&j, &v)| full_g[j] = v);
    Ok(SinkhornSolution { plan, f: full_f, g: full_g })
}

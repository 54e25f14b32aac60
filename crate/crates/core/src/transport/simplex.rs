//! Transportation simplex (MODI / u–v method) with north-west-corner start and
//! Bland's smallest-index rule for both the entering and the leaving cell.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub(crate) struct SimplexSolution {
    pub flow: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

struct Tableau<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    basic: Vec<bool>,
    cells: Vec<usize>,
}

impl Tableau<'_> {
    /// Adjacency of the basis tree over `n` row nodes followed by `m` column nodes.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n + self.m];
        for &c in &self.cells {
            let (i, j) = (c / self.m, c % self.m);
            adj[i].push((self.n + j, c));
            adj[self.n + j].push((i, c));
        }
        adj
    }

    /// Potentials with `u[0] = 0` and `u_i + v_j = c_ij` on basic cells.
    fn potentials(&self, adj: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let mut pot = vec![f64::NAN; self.n + self.m];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(next, cell) in &adj[node] {
                if pot[next].is_nan() {
                    pot[next] = self.cost[cell] - pot[node];
                    queue.push_back(next);
                }
            }
        }
        let v = pot.split_off(self.n);
        (pot, v)
    }

    /// Basic cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let target = self.n + j;
        let mut parent = vec![usize::MAX; self.n + self.m];
        let mut via = vec![usize::MAX; self.n + self.m];
        parent[i] = i;
        let mut queue = VecDeque::from([i]);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(next, cell) in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    via[next] = cell;
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = target;
        while node != i {
            cells.push(via[node]);
            node = parent[node];
        }
        cells.reverse();
        cells
    }
}

fn north_west_corner(a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let (n, m) = (a.len(), b.len());
    let mut flow = vec![0.0; n * m];
    let mut cells = Vec::with_capacity(n + m - 1);
    let (mut ra, mut rb) = (a[0], b[0]);
    let (mut i, mut j) = (0, 0);
    loop {
        let cell = i * m + j;
        cells.push(cell);
        if i == n - 1 && j == m - 1 {
            flow[cell] = ra.max(rb).max(0.0);
            break;
        }
        let row_done = j == m - 1 || (i < n - 1 && ra <= rb);
        if row_done {
            flow[cell] = ra.max(0.0);
            rb -= ra;
            i += 1;
            ra = a[i];
        } else {
            flow[cell] = rb.max(0.0);
            ra -= rb;
            j += 1;
            rb = b[j];
        }
    }
    (flow, cells)
}

/// Solve `min Σ c_ij x_ij` over couplings of `a` and `b` (row-major costs, `m` columns).
pub(crate) fn transportation_simplex(a: &[f64], b: &[f64], cost: &[f64]) -> Result<SimplexSolution> {
    let (n, m) = (a.len(), b.len());
    let (flow, cells) = north_west_corner(a, b);
    let mut basic = vec![false; n * m];
    cells.iter().for_each(|&c| basic[c] = true);
    let mut tab = Tableau { n, m, cost, flow, basic, cells };

    let scale = cost.iter().fold(1.0f64, |s, c| s.max(c.abs()));
    let eps = 1e-12 * scale;
    let max_pivots = 50 * (n * m).max(100) * (n + m);
    let mut pivots = 0;
    loop {
        let adj = tab.adjacency();
        let (u, v) = tab.potentials(&adj);
        let entering = (0..n * m).find(|&c| !tab.basic[c] && cost[c] - u[c / m] - v[c % m] < -eps);
        let Some(enter) = entering else {
            let flow = tab.flow.iter().map(|f| f.max(0.0)).collect();
            return Ok(SimplexSolution { flow, u, v });
        };
        pivots += 1;
        if pivots > max_pivots {
            let residual = cost[enter] - u[enter / m] - v[enter % m];
            return Err(Error::Convergence { iterations: pivots, residual });
        }
        let path = tab.path(&adj, enter / m, enter % m);
        // odd positions along the path lose flow
        let step = path.iter().step_by(2).map(|&c| tab.flow[c]).fold(f64::INFINITY, f64::min);
        let leave = path
            .iter()
            .step_by(2)
            .copied()
            .filter(|&c| tab.flow[c] <= step)
            .min()
            .expect("cycle has a donor cell");
        for (k, &c) in path.iter().enumerate() {
            if k % 2 == 0 {
                tab.flow[c] -= step;
            } else {
                tab.flow[c] += step;
            }
        }
        tab.flow[enter] = step;
        tab.flow[leave] = 0.0;
        tab.basic[leave] = false;
        tab.basic[enter] = true;
        let slot = tab.cells.iter().position(|&c| c == leave).unwrap();
        tab.cells[slot] = enter;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nw_corner_is_feasible_tree() {
        let a = [0.5, 0.5];
        let b = [0.5, 0.5];
        let (flow, cells) = north_west_corner(&a, &b);
        assert_eq!(cells, vec![0, 2, 3]);
        assert_eq!(flow, vec![0.5, 0.0, 0.0, 0.5]);

        let a = [0.2, 0.3, 0.5];
        let b = [0.6, 0.4];
        let (flow, cells) = north_west_corner(&a, &b);
        assert_eq!(cells.len(), 4);
        for i in 0..3 {
            assert!((flow[2 * i] + flow[2 * i + 1] - a[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn solves_small_assignment() {
        // optimum is the anti-diagonal
        let cost = [4.0, 1.0, 2.0, 5.0];
        let sol = transportation_simplex(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert_eq!(sol.flow, vec![0.0, 0.5, 0.5, 0.0]);
        assert_eq!(sol.u[0], 0.0);
        for (c, (cost, flow)) in cost.iter().zip(&sol.flow).enumerate() {
            let r = cost - sol.u[c / 2] - sol.v[c % 2];
            assert!(r >= -1e-12);
            if *flow > 0.0 {
                assert!(r.abs() < 1e-12);
            }
        }
    }
}

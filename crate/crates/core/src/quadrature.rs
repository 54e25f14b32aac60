//! Gauss–Hermite rules for expectations under the standard normal law.
//!
//! Nodes are the roots of the probabilists' Hermite polynomial `He_n`, found
//! as eigenvalues of the symmetric Jacobi matrix (Golub–Welsch) and polished
//! with Newton steps on the orthonormal recurrence. Weights use the closed form
//! `w = 1 / (n · p_{n-1}(x)²)` with `p_k = He_k / √k!`, which keeps the tiny
//! tail weights accurate to full relative precision.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::measures::NodeSet;
use crate::point::Point;

/// Largest dimension for which tensor-product grids are built.
pub const MAX_TENSOR_DIM: usize = 3;

/// Evaluate the orthonormal probabilists' Hermite polynomials `p_{n-1}(x)` and `p_n(x)`.
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        // x p_k = √(k+1) p_{k+1} + √k p_{k-1}
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// One-dimensional rule for `E[f(X)]`, `X ~ N(0,1)`: (nodes ascending, weights summing to 1).
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Validation("Gauss-Hermite rule needs at least one node".into()));
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (pm1, pn) = hermite_pair(n, *x);
            let deriv = (n as f64).sqrt() * pm1;
            if deriv == 0.0 {
                break;
            }
            *x -= pn / deriv;
        }
        let (pm1, _) = hermite_pair(n, *x);
        weights.push(1.0 / (n as f64 * pm1 * pm1));
    }

    // exact symmetry about the origin
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((nodes, weights))
}

/// Tensor-product Gauss–Hermite node set for `N(0, I_d)`.
pub fn gaussian_tensor_grid(dim: usize, per_axis: usize) -> Result<NodeSet> {
    if dim == 0 || dim > MAX_TENSOR_DIM {
        return Err(Error::Validation(format!(
            "tensor quadrature supports 1 <= d <= {MAX_TENSOR_DIM}, got d = {dim}"
        )));
    }
    let (x, w) = gauss_hermite(per_axis)?;
    let total = per_axis.pow(dim as u32);
    let mut nodes: Vec<Point> = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut p = vec![0.0; dim];
        let mut wt = 1.0;
        for axis in (0..dim).rev() {
            let k = rem % per_axis;
            rem /= per_axis;
            p[axis] = x[k];
            wt *= w[k];
        }
        nodes.push(p);
        weights.push(wt);
    }
    NodeSet::new(format!("gauss-hermite:{dim}:{per_axis}"), nodes, weights)
}

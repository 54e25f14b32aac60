//! Brute-force transport oracle for marginals with weights `k / N`.
//!
//! Such a problem is the aggregation of an `N × N` assignment problem whose
//! feasible set is the Birkhoff polytope; its vertices are permutation
//! matrices, so the optimum is a minimum over `N!` permutations.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

pub const MAX_SLOTS: usize = 8;

/// A random 1-D problem: atoms in [-3, 3] and integer weights summing to `slots`.
#[derive(Debug, Clone)]
pub struct RationalProblem {
    pub slots: usize,
    pub source: Vec<f64>,
    pub source_counts: Vec<usize>,
    pub target: Vec<f64>,
    pub target_counts: Vec<usize>,
}

impl RationalProblem {
    pub fn source_weights(&self) -> Vec<f64> {
        self.source_counts.iter().map(|&k| k as f64 / self.slots as f64).collect()
    }

    pub fn target_weights(&self) -> Vec<f64> {
        self.target_counts.iter().map(|&k| k as f64 / self.slots as f64).collect()
    }
}

fn composition<R: Rng>(rng: &mut R, total: usize, parts: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts[..parts - 1].to_vec();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn distinct_atoms<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(n);
    while out.len() < n {
        let x = rng.gen_range(-3.0..3.0);
        if out.iter().all(|y: &f64| (x - y).abs() > 1e-3) {
            out.push(x);
        }
    }
    out
}

pub fn random_problem<R: Rng>(rng: &mut R, max_atoms: usize) -> RationalProblem {
    let slots = rng.gen_range(2..=MAX_SLOTS);
    let n = rng.gen_range(1..=max_atoms.min(slots));
    let m = rng.gen_range(1..=max_atoms.min(slots));
    RationalProblem {
        slots,
        source: distinct_atoms(rng, n),
        source_counts: composition(rng, slots, n),
        target: distinct_atoms(rng, m),
        target_counts: composition(rng, slots, m),
    }
}

fn expand(counts: &[usize]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect()
}

/// Minimum of `Σ_s cost[a(s)][b(σ(s))] / N` over permutations `σ`.
pub fn brute_force(cost: &dyn Fn(usize, usize) -> f64, source_counts: &[usize], target_counts: &[usize]) -> f64 {
    let a = expand(source_counts);
    let b = expand(target_counts);
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let table: Vec<Vec<f64>> = a.iter().map(|&i| b.iter().map(|&j| cost(i, j)).collect()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &table, &mut best);
    best / n as f64
}

fn permute(perm: &mut Vec<usize>, k: usize, table: &[Vec<f64>], best: &mut f64) {
    if k == perm.len() {
        let total: f64 = perm.iter().enumerate().map(|(s, &t)| table[s][t]).sum();
        if total < *best {
            *best = total;
        }
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, table, best);
        perm.swap(k, i);
    }
}

//! Randomized verification harnesses for the embedding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    gateaux_fd, portfolio_map, random_measure, supergrad_inequality, Embedding, ExpConcaveFn, Tolerances,
    DEFAULT_FD_STEPS,
};
use crate::ctransform::{concavity_residual, grid_tolerance, GridFn};
use crate::error::Result;
use crate::measures::{mixture, tv_distance, MeasureRep};
use crate::point::{sub, Point};

/// Rebuild ψ(α) = φ(μ_α) + Λ₀(α) on `alpha_grid` and return it with its
/// concavity residual and the grid tolerance `L·h + h²`.
pub fn theorem5_forward_residual(f: &ExpConcaveFn, alpha_grid: &[Point], lipschitz: f64) -> Result<(GridFn, f64, f64)> {
    let base = f.base();
    let values = alpha_grid
        .par_iter()
        .map(|alpha| Ok(f.phi_eval(&base.tilt(alpha)?)?.value + base.cgf(alpha)))
        .collect::<Result<Vec<f64>>>()?;
    let psi = GridFn::new(alpha_grid.to_vec(), values)?;
    let residual = concavity_residual(&psi, base)?;
    Ok((psi, residual, grid_tolerance(alpha_grid, lipschitz)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem7Case {
    pub alpha: Point,
    pub theta: Point,
    /// `|μ_α(h_α) − 1|`
    pub normalization: f64,
    /// `TV(π_α, μ_{α−θ})`
    pub tv: f64,
    /// Smallest value of the supergradient inequality over the tested ν.
    pub supergrad_min: f64,
    /// Largest extrapolated Gâteaux error over the tested ν.
    pub fd_error: f64,
    pub pass: bool,
}

/// For every α in `alphas` and every θ with `(α, θ) ∈ ∂^{Λ₀}ψ` (duality gap
/// within `pair_tol`), check normalization, the portfolio identity, the
/// supergradient inequality and the Gâteaux derivative against `n_nu`
/// random measures plus μ₀ and π_α.
pub fn verify_theorem7(emb: &Embedding, alphas: &[Point], pair_tol: f64, n_nu: usize, seed: u64) -> Result<Vec<Theorem7Case>> {
    let base = emb.base();
    let tol = Tolerances::for_base(base);
    let nodes = base.node_set()?.clone();
    let mut pairs = Vec::new();
    for alpha in alphas {
        for theta in emb.pairs_at(alpha, pair_tol)? {
            pairs.push((alpha.clone(), theta));
        }
    }
    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = pairs.iter().map(|_| seeder.gen()).collect();

    pairs
        .par_iter()
        .zip(seeds)
        .map(|((alpha, theta), s)| {
            let sg = emb.supergradient(alpha, theta, pair_tol.max(1e-8))?;
            let pi = portfolio_map(&sg);
            let tilt = base.tilt(&sub(alpha, theta))?;
            let tv = tv_distance(&pi, &tilt)?;
            let normalization = (sg.normalization - 1.0).abs();

            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut nus: Vec<MeasureRep> = (0..n_nu).map(|_| random_measure(&nodes, &mut rng)).collect();
            nus.push(MeasureRep::base_measure(nodes.clone()));
            if let Ok(p) = MeasureRep::normalized(nodes.clone(), pi.density().to_vec()) {
                nus.push(p);
            }
            let mut supergrad_min = f64::INFINITY;
            let mut fd_error = 0.0f64;
            for nu in &nus {
                supergrad_min = supergrad_min.min(supergrad_inequality(emb.phi(), &sg, nu)?);
                fd_error = fd_error.max(gateaux_fd(&sg, nu, &DEFAULT_FD_STEPS)?.error);
            }
            let pass = normalization <= tol.normalization
                && tv <= tol.portfolio_tv
                && supergrad_min >= -tol.supergradient
                && fd_error <= tol.gateaux;
            Ok(Theorem7Case { alpha: alpha.clone(), theta: theta.clone(), normalization, tv, supergrad_min, fd_error, pass })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpConcavityReport {
    pub trials: usize,
    /// Smallest `exp φ(½μ + ½ν) − ½exp φ(μ) − ½exp φ(ν)`; concavity means ≥ 0.
    pub worst_violation: f64,
}

/// Midpoint concavity of `exp φ` over random pairs of measures on the base nodes.
pub fn exp_concavity_check<R: Rng + ?Sized>(f: &ExpConcaveFn, trials: usize, rng: &mut R) -> Result<ExpConcavityReport> {
    let nodes = f.base().node_set()?.clone();
    let pairs: Vec<(MeasureRep, MeasureRep)> = (0..trials)
        .map(|_| (random_measure(&nodes, rng), random_measure(&nodes, rng)))
        .collect();
    let worst = pairs
        .par_iter()
        .map(|(mu, nu)| {
            let mid = mixture(mu, nu, 0.5)?;
            let e = |m: &MeasureRep| -> Result<f64> { Ok(f.phi_eval(m)?.value.exp()) };
            Ok(e(&mid)? - 0.5 * e(mu)? - 0.5 * e(nu)?)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(ExpConcavityReport { trials, worst_violation: if trials == 0 { 0.0 } else { worst } })
}

//! Exponentially concave functions on measures absolutely continuous with
//! respect to the base, and their link with Λ₀-concave potentials.
//!
//! Given a generator `g` on a θ-grid, `φ(μ) = min_θ [log μ(e^{−⟨θ,x⟩}) − g(θ)]`.
//! Each branch `f_θ(μ) = log μ(e^{−⟨θ,x⟩}) − g(θ)` is the log of a linear
//! functional, so `exp φ` is a minimum of nonnegative linear functionals and
//! hence concave. When `g = ψ⁰` is the conjugate of a Λ₀-concave ψ,
//! `φ(μ_α) = ψ(α) − Λ₀(α)` and every pair `(α, θ) ∈ ∂^{Λ₀}ψ` yields the
//! supergradient density `h_α(x) = exp(−⟨θ,x⟩ − Λ₀(α−θ) + Λ₀(α))` at μ_α,
//! whose portfolio measure `h_α·μ_α` is the tilt `μ_{α−θ}`.

mod verify;

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::cgf::{BaseKind, BaseMeasure};
use crate::ctransform::{concavity_residual_on, grid_tolerance, superdiff_check, superdiff_pairs, transform_fwd, GridFn, Transform};
use crate::error::{Error, Result};
use crate::measures::{mixture, DiscreteMeasure, FiniteMeasure, MeasureRep, NodeSet};
use crate::point::{dot, neg, sub, Point};

pub use verify::{
    exp_concavity_check, theorem5_forward_residual, verify_theorem7, ExpConcavityReport, Theorem7Case,
};

/// Minimum Gauss–Hermite nodes per axis for embedding checks on a Gaussian base.
pub const MIN_GAUSSIAN_NODES: usize = 40;

/// Tolerances that depend on whether expectations are exact sums or quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub normalization: f64,
    pub portfolio_tv: f64,
    pub supergradient: f64,
    pub gateaux: f64,
    pub exp_concavity: f64,
}

impl Tolerances {
    pub fn for_base(base: &BaseMeasure) -> Self {
        if base.is_quadrature_backed() {
            Self { normalization: 1e-6, portfolio_tv: 1e-8, supergradient: 1e-9, gateaux: 1e-6, exp_concavity: 1e-9 }
        } else {
            Self { normalization: 1e-10, portfolio_tv: 1e-12, supergradient: 1e-9, gateaux: 1e-6, exp_concavity: 1e-9 }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorMode {
    /// `φ(μ) = inf_θ [log μ(e^{−⟨θ,x⟩}) − h(θ)]` for an arbitrary `h`.
    FromH,
    /// The generator is the conjugate ψ⁰ of a Λ₀-concave ψ.
    FromConjugate,
}

#[derive(Debug, Clone)]
pub struct ExpConcaveFn {
    base: BaseMeasure,
    generator: GridFn,
    mode: GeneratorMode,
}

/// Value of φ at a measure with the minimizing generator entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiValue {
    pub value: f64,
    /// `None` when φ ≡ −∞ (improper generator).
    pub argmin: Option<usize>,
    /// The minimizer sits on the generator grid's boundary (likely truncation).
    pub boundary: bool,
}

fn require_nodes(base: &BaseMeasure) -> Result<&Arc<NodeSet>> {
    if let BaseKind::Gaussian { nodes_per_axis } = base.kind() {
        if *nodes_per_axis < MIN_GAUSSIAN_NODES {
            return Err(Error::Validation(format!(
                "Gaussian base needs at least {MIN_GAUSSIAN_NODES} nodes per axis here, has {nodes_per_axis}"
            )));
        }
    }
    base.node_set()
}

impl ExpConcaveFn {
    pub fn new(base: BaseMeasure, generator: GridFn, mode: GeneratorMode) -> Result<Self> {
        require_nodes(&base)?;
        if generator.dim() != base.dim() {
            return Err(Error::DimensionMismatch { field: "generator", expected: base.dim(), found: generator.dim() });
        }
        Ok(Self { base, generator, mode })
    }

    pub fn from_h(base: BaseMeasure, h: GridFn) -> Result<Self> {
        Self::new(base, h, GeneratorMode::FromH)
    }

    pub fn from_conjugate(base: BaseMeasure, psi0: GridFn) -> Result<Self> {
        Self::new(base, psi0, GeneratorMode::FromConjugate)
    }

    pub fn base(&self) -> &BaseMeasure {
        &self.base
    }

    pub fn generator(&self) -> &GridFn {
        &self.generator
    }

    pub fn mode(&self) -> GeneratorMode {
        self.mode
    }

    /// False when the generator is −∞ everywhere, i.e. φ ≡ −∞.
    pub fn is_proper(&self) -> bool {
        self.generator.is_proper()
    }

    fn nodes(&self) -> &Arc<NodeSet> {
        self.base.node_set().expect("checked at construction")
    }

    fn check_support(&self, mu: &MeasureRep) -> Result<()> {
        if Arc::ptr_eq(mu.base(), self.nodes()) || mu.base().as_ref() == self.nodes().as_ref() {
            Ok(())
        } else {
            Err(Error::NotAbsolutelyContinuous(format!(
                "measure lives on `{}`, base nodes are `{}`",
                mu.base().label(),
                self.nodes().label()
            )))
        }
    }

    /// Branch `f_θ(μ) = log μ(e^{−⟨θ,x⟩}) − g(θ)` for generator entry `k`.
    pub fn branch(&self, k: usize, mu: &MeasureRep) -> Result<f64> {
        self.check_support(mu)?;
        let theta = &self.generator.grid()[k];
        Ok(mu.log_exp_moment(&neg(theta)) - self.generator.values()[k])
    }

    /// φ(μ) minimized over the generator grid.
    pub fn phi_eval(&self, mu: &MeasureRep) -> Result<PhiValue> {
        self.check_support(mu)?;
        let mut best = PhiValue { value: f64::NEG_INFINITY, argmin: None, boundary: false };
        if !self.is_proper() {
            return Ok(best);
        }
        best.value = f64::INFINITY;
        for (k, (theta, g)) in self.generator.grid().iter().zip(self.generator.values()).enumerate() {
            if *g == f64::NEG_INFINITY {
                continue;
            }
            let v = mu.log_exp_moment(&neg(theta)) - g;
            if v < best.value {
                best.value = v;
                best.argmin = Some(k);
            }
        }
        best.boundary = best.argmin.is_some_and(|k| self.generator.on_boundary(k));
        Ok(best)
    }

    /// φ at a discrete measure whose atoms are base nodes.
    pub fn phi_eval_discrete(&self, mu: &DiscreteMeasure) -> Result<PhiValue> {
        let rep = discrete_as_rep(&self.base, mu)?;
        self.phi_eval(&rep)
    }
}

/// Express a discrete measure as a density on the nodes of a finitely supported base.
pub fn discrete_as_rep(base: &BaseMeasure, mu: &DiscreteMeasure) -> Result<MeasureRep> {
    if base.is_quadrature_backed() {
        return Err(Error::NotAbsolutelyContinuous("atoms are singular with respect to a Gaussian base".into()));
    }
    let nodes = base.node_set()?;
    let mut density = vec![0.0; nodes.len()];
    for (atom, w) in mu.atoms().iter().zip(mu.weights()) {
        if *w == 0.0 {
            continue;
        }
        let k = nodes
            .position(atom)
            .ok_or_else(|| Error::NotAbsolutelyContinuous(format!("atom {atom:?} carries mass outside the base support")))?;
        density[k] = w / nodes.node_weights()[k];
    }
    MeasureRep::normalized(nodes.clone(), density)
}

/// A Λ₀-concave ψ together with its conjugate and the induced φ.
#[derive(Debug, Clone)]
pub struct Embedding {
    psi: GridFn,
    conjugate: Transform,
    phi: ExpConcaveFn,
    grid_tol: f64,
    concavity_residual: f64,
}

impl Embedding {
    /// Conjugate ψ on `theta_grid` (ψ's own grid when `None`) and build φ from it.
    /// Fails when ψ is not Λ₀-concave within the grid tolerance `L·h + h²`.
    pub fn new(base: BaseMeasure, psi: GridFn, theta_grid: Option<&[Point]>, lipschitz: f64) -> Result<Self> {
        require_nodes(&base)?;
        let theta_grid = theta_grid.unwrap_or(psi.grid()).to_vec();
        let grid_tol = grid_tolerance(psi.grid(), lipschitz);
        let concavity_residual = concavity_residual_on(&psi, &theta_grid, &base)?;
        if concavity_residual > grid_tol {
            return Err(Error::Precondition {
                what: format!("psi is not Lambda0-concave on its grid (tolerance {grid_tol:e})"),
                residual: concavity_residual,
            });
        }
        let conjugate = transform_fwd(&psi, &theta_grid, &base)?;
        let phi = ExpConcaveFn::from_conjugate(base, conjugate.function.clone())?;
        Ok(Self { psi, conjugate, phi, grid_tol, concavity_residual })
    }

    pub fn psi(&self) -> &GridFn {
        &self.psi
    }

    pub fn conjugate(&self) -> &Transform {
        &self.conjugate
    }

    pub fn phi(&self) -> &ExpConcaveFn {
        &self.phi
    }

    pub fn base(&self) -> &BaseMeasure {
        self.phi.base()
    }

    pub fn grid_tolerance(&self) -> f64 {
        self.grid_tol
    }

    pub fn concavity_residual(&self) -> f64 {
        self.concavity_residual
    }

    /// `|φ(μ_α) − ψ(α) + Λ₀(α)|`.
    pub fn theorem5_residual(&self, alpha: &[f64]) -> Result<f64> {
        let psi_alpha = self.psi.value_at(alpha)?;
        let mu_alpha = self.base().tilt(alpha)?;
        let phi = self.phi.phi_eval(&mu_alpha)?.value;
        Ok((phi - psi_alpha + self.base().cgf(alpha)).abs())
    }

    /// All θ-grid points with `|Λ₀(α−θ) − ψ(α) − ψ⁰(θ)| ≤ tol`.
    pub fn pairs_at(&self, alpha: &[f64], tol: f64) -> Result<Vec<Point>> {
        let conj = &self.conjugate.function;
        Ok(superdiff_pairs(&self.psi, conj, alpha, self.base(), tol)?
            .into_iter()
            .map(|k| conj.grid()[k].clone())
            .collect())
    }

    pub fn supergradient(&self, alpha: &[f64], theta: &[f64], tol: f64) -> Result<SupergradientDensity> {
        supergradient(self.base(), &self.psi, alpha, theta, tol)
    }
}

/// Convenience: `|φ(μ_α) − ψ(α) + Λ₀(α)|` with φ built from ψ on its own grid
/// and the default Lipschitz bound.
pub fn theorem5_residual(psi: &GridFn, base: &BaseMeasure, alpha: &[f64]) -> Result<f64> {
    Embedding::new(base.clone(), psi.clone(), None, crate::ctransform::DEFAULT_LIPSCHITZ)?.theorem5_residual(alpha)
}

/// `h_α` on the base nodes for a superdifferential pair `(α, θ)`.
#[derive(Debug, Clone)]
pub struct SupergradientDensity {
    pub alpha: Point,
    pub theta: Point,
    values: Vec<f64>,
    mu_alpha: MeasureRep,
    /// `μ_α(h_α)`, which should be one.
    pub normalization: f64,
}

impl SupergradientDensity {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mu_alpha(&self) -> &MeasureRep {
        &self.mu_alpha
    }
}

/// Build `h_α(x) = exp(−⟨θ,x⟩ − Λ₀(α−θ) + Λ₀(α))`, requiring `(α, θ) ∈ ∂^{Λ₀}ψ`
/// on ψ's grid and `μ_α(h_α) = 1` up to the base's normalization tolerance.
pub fn supergradient(base: &BaseMeasure, psi: &GridFn, alpha: &[f64], theta: &[f64], tol: f64) -> Result<SupergradientDensity> {
    let nodes = require_nodes(base)?;
    let check = superdiff_check(psi, alpha, theta, base, tol)?;
    if !check.accepted {
        return Err(Error::Precondition {
            what: format!("({alpha:?}, {theta:?}) is not a superdifferential pair"),
            residual: check.slack,
        });
    }
    let shift = base.cgf(alpha) - base.cgf(&sub(alpha, theta));
    let values: Vec<f64> = nodes.nodes().iter().map(|x| (shift - dot(theta, x)).exp()).collect();
    let mu_alpha = base.tilt(alpha)?;
    let normalization: f64 = (0..nodes.len()).map(|k| mu_alpha.mass(k) * values[k]).sum();
    let limit = Tolerances::for_base(base).normalization;
    if (normalization - 1.0).abs() > limit {
        return Err(Error::Precondition {
            what: format!("mu_alpha(h_alpha) deviates from 1 beyond {limit:e}"),
            residual: (normalization - 1.0).abs(),
        });
    }
    Ok(SupergradientDensity { alpha: alpha.to_vec(), theta: theta.to_vec(), values, mu_alpha, normalization })
}

/// The portfolio measure `π_α` with `dπ_α/dμ_α = h_α` (not renormalized).
pub fn portfolio_map(sg: &SupergradientDensity) -> MeasureRep {
    let density = sg.mu_alpha.density().iter().zip(&sg.values).map(|(d, h)| d * h).collect();
    MeasureRep::from_raw(sg.mu_alpha.base().clone(), density)
}

/// `⟨μ*_α, ν⟩ = ν(h_α)`.
pub fn pairing(sg: &SupergradientDensity, nu: &MeasureRep) -> Result<f64> {
    if !nu.shares_base(&sg.mu_alpha) {
        return Err(Error::Structural("measure and supergradient live on different node sets".into()));
    }
    Ok((0..nu.density().len()).map(|k| nu.mass(k) * sg.values[k]).sum())
}

/// `φ(μ_α) + ν(h_α) − 1 − φ(ν)`, nonnegative when `h_α` is a supergradient.
pub fn supergrad_inequality(f: &ExpConcaveFn, sg: &SupergradientDensity, nu: &MeasureRep) -> Result<f64> {
    if f.nodes().as_ref() != sg.mu_alpha.base().as_ref() {
        return Err(Error::Structural("function and supergradient use different bases".into()));
    }
    let at_alpha = f.phi_eval(&sg.mu_alpha)?.value;
    let at_nu = f.phi_eval(nu)?.value;
    Ok(at_alpha + pairing(sg, nu)? - 1.0 - at_nu)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateauxReport {
    pub steps: Vec<f64>,
    pub quotients: Vec<f64>,
    pub extrapolated: f64,
    /// `ν(h_α) − 1`.
    pub expected: f64,
    pub error: f64,
}

/// Default one-sided steps for [`gateaux_fd`].
pub const DEFAULT_FD_STEPS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

/// One-sided difference quotients of `t ↦ f_θ((1−t)μ_α + tν)` at `t = 0+`,
/// extrapolated to `t = 0` by Neville's scheme and compared with `ν(h_α) − 1`.
///
/// When the path moves faster than the largest step (a density dν/dμ_α with
/// a heavy tail), all steps shrink by powers of ten until it does not, which
/// keeps the quotients in the linear regime. The reported error is relative
/// to `max(1, |ν(h_α) − 1|)`.
pub fn gateaux_fd(sg: &SupergradientDensity, nu: &MeasureRep, steps: &[f64]) -> Result<GateauxReport> {
    if steps.is_empty() || steps.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::Validation("difference steps must lie in (0, 1]".into()));
    }
    let minus_theta = neg(&sg.theta);
    let branch = |m: &MeasureRep| m.log_exp_moment(&minus_theta);
    let at_zero = branch(&sg.mu_alpha);
    let path = |t: f64| -> Result<f64> { Ok(branch(&mixture(&sg.mu_alpha, nu, t)?) - at_zero) };

    let largest = steps.iter().copied().fold(0.0, f64::max);
    let mut scale = 1.0;
    while scale > 1e-300 && path(largest * scale)?.abs() > largest {
        scale *= 0.1;
    }
    let steps: Vec<f64> = steps.iter().map(|t| t * scale).collect();
    let quotients = steps.iter().map(|&t| Ok(path(t)? / t)).collect::<Result<Vec<f64>>>()?;
    let extrapolated = neville_at_zero(&steps, &quotients);
    let expected = pairing(sg, nu)? - 1.0;
    let error = (extrapolated - expected).abs() / expected.abs().max(1.0);
    Ok(GateauxReport { steps, quotients, extrapolated, expected, error })
}

fn neville_at_zero(t: &[f64], q: &[f64]) -> f64 {
    let mut p = q.to_vec();
    let n = t.len();
    for level in 1..n {
        for i in 0..n - level {
            let j = i + level;
            p[i] = (t[j] * p[i] - t[i] * p[i + 1]) / (t[j] - t[i]);
        }
    }
    p[0]
}

/// Random probability measure on `nodes` with Dirichlet(1) masses.
pub fn random_measure<R: Rng + ?Sized>(nodes: &Arc<NodeSet>, rng: &mut R) -> MeasureRep {
    let masses: Vec<f64> = (0..nodes.len()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let density: Vec<f64> = masses.iter().zip(nodes.node_weights()).map(|(m, w)| m / w).collect();
    MeasureRep::normalized(nodes.clone(), density).expect("positive masses")
}

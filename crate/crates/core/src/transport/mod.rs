//! Discrete Monge–Kantorovich problems with cost `c(θ, y) = Λ₀(θ − y)`.
//!
//! [`solve_exact`] runs the transportation simplex and returns an optimal
//! basic plan together with dual potentials; [`certify`] checks that the
//! support of a plan lies in the Λ₀-superdifferential of a Λ₀-concave
//! function built from those potentials, which is sufficient for optimality.

mod simplex;
mod sinkhorn;

use rayon::prelude::*;
use serde::Serialize;

use crate::cgf::BaseMeasure;
use crate::ctransform::{duality_gap, superdiff_check, transform_bwd, GridFn};
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, FiniteMeasure};
use crate::point::{max_norm_dist, Point};

pub use sinkhorn::{MARGINAL_TOL as SINKHORN_MARGINAL_TOL, MAX_ITER as SINKHORN_MAX_ITER};

/// Largest `|P|·|Q|` accepted by [`solve_exact`].
pub const MAX_EXACT_ENTRIES: usize = 1_000_000;
/// Plan entries above this count as support for certification.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Certificate acceptance threshold on the worst slack.
pub const CERTIFICATE_TOL: f64 = 1e-7;
/// Row entries above this count towards a Monge map.
pub const MONGE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TransportProblem {
    pub source: DiscreteMeasure,
    pub target: DiscreteMeasure,
    pub base: BaseMeasure,
}

impl TransportProblem {
    pub fn new(source: DiscreteMeasure, target: DiscreteMeasure, base: BaseMeasure) -> Result<Self> {
        for (field, d) in [("source", source.dim()), ("target", target.dim())] {
            if d != base.dim() {
                return Err(Error::DimensionMismatch { field, expected: base.dim(), found: d });
            }
        }
        Ok(Self { source, target, base })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.source.len(), self.target.len())
    }

    /// Row-major matrix `c(θ_i, y_j)`.
    pub fn cost_matrix(&self) -> Vec<f64> {
        let targets = self.target.atoms();
        self.source
            .atoms()
            .par_iter()
            .flat_map_iter(|th| targets.iter().map(move |y| self.base.cost(th, y)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
    pub objective: f64,
}

impl Coupling {
    /// Build a coupling from a row-major plan, computing its objective.
    pub fn from_plan(prob: &TransportProblem, plan: Vec<f64>) -> Result<Self> {
        let (rows, cols) = prob.shape();
        if plan.len() != rows * cols {
            return Err(Error::DimensionMismatch { field: "plan", expected: rows * cols, found: plan.len() });
        }
        if plan.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Validation("plan entries must be finite and nonnegative".into()));
        }
        let objective = plan.iter().zip(prob.cost_matrix()).map(|(p, c)| p * c).sum();
        Ok(Self { rows, cols, plan, objective })
    }

    /// The independent coupling `P ⊗ Q`.
    pub fn product(prob: &TransportProblem) -> Result<Self> {
        let plan = prob
            .source
            .weights()
            .iter()
            .flat_map(|a| prob.target.weights().iter().map(move |b| a * b))
            .collect();
        Self::from_plan(prob, plan)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn plan(&self) -> &[f64] {
        &self.plan
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.get(i, j)).sum()).collect()
    }

    /// L¹ distance of the marginals from `(P, Q)`.
    pub fn marginal_violation(&self, prob: &TransportProblem) -> f64 {
        let r: f64 = self.row_sums().iter().zip(prob.source.weights()).map(|(a, b)| (a - b).abs()).sum();
        let c: f64 = self.col_sums().iter().zip(prob.target.weights()).map(|(a, b)| (a - b).abs()).sum();
        r + c
    }

    /// `(i, j, mass)` for entries above `threshold`, row-major.
    pub fn support(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        self.plan
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(k, &p)| (k / self.cols, k % self.cols, p))
            .collect()
    }

    /// Total variation distance between two plans of equal shape.
    pub fn tv_distance(&self, other: &Coupling) -> f64 {
        0.5 * self.plan.iter().zip(&other.plan).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

/// Kantorovich potentials: `psi` on source atoms, `psi0` on target atoms.
#[derive(Debug, Clone, Serialize)]
pub struct DualPotentials {
    pub psi: GridFn,
    pub psi0: GridFn,
}

impl DualPotentials {
    /// `Σ P_i ψ(θ_i) + Σ Q_j ψ⁰(y_j)`.
    pub fn dual_objective(&self, prob: &TransportProblem) -> f64 {
        let s: f64 = self.psi.values().iter().zip(prob.source.weights()).map(|(v, w)| v * w).sum();
        let t: f64 = self.psi0.values().iter().zip(prob.target.weights()).map(|(v, w)| v * w).sum();
        s + t
    }

    /// `max_ij [ψ(θ_i) + ψ⁰(y_j) − c(θ_i, y_j)]₊`.
    pub fn feasibility_violation(&self, prob: &TransportProblem) -> f64 {
        let (_, m) = prob.shape();
        prob.cost_matrix()
            .iter()
            .enumerate()
            .map(|(k, c)| self.psi.values()[k / m] + self.psi0.values()[k % m] - c)
            .fold(0.0, f64::max)
    }
}

/// Optimal basic plan and normalized duals (`ψ(θ₀) = 0`).
pub fn solve_exact(prob: &TransportProblem) -> Result<(Coupling, DualPotentials)> {
    let (n, m) = prob.shape();
    if n == 0 || m == 0 {
        return Err(Error::Validation("empty support".into()));
    }
    if n * m > MAX_EXACT_ENTRIES {
        return Err(Error::Validation(format!(
            "{n} x {m} problem exceeds the {MAX_EXACT_ENTRIES}-entry limit of the exact solver"
        )));
    }
    let cost = prob.cost_matrix();
    let sol = simplex::transportation_simplex(prob.source.weights(), prob.target.weights(), &cost)?;
    let coupling = Coupling::from_plan(prob, sol.flow)?;
    let duals = DualPotentials {
        psi: GridFn::new(prob.source.atoms().to_vec(), sol.u)?,
        psi0: GridFn::new(prob.target.atoms().to_vec(), sol.v)?,
    };
    Ok((coupling, duals))
}

/// Entropic plan from log-domain Sinkhorn, together with the scaled potentials.
pub fn solve_entropic(prob: &TransportProblem, epsilon: f64) -> Result<(Coupling, DualPotentials)> {
    let (n, m) = prob.shape();
    if n == 0 || m == 0 {
        return Err(Error::Validation("empty support".into()));
    }
    let cost = prob.cost_matrix();
    let sol = sinkhorn::sinkhorn(prob.source.weights(), prob.target.weights(), &cost, epsilon)?;
    let coupling = Coupling::from_plan(prob, sol.plan)?;
    let shift = sol.f.first().copied().filter(|v| v.is_finite()).unwrap_or(0.0);
    let duals = DualPotentials {
        psi: GridFn::new(prob.source.atoms().to_vec(), sol.f.iter().map(|v| v - shift).collect())?,
        psi0: GridFn::new(prob.target.atoms().to_vec(), sol.g.iter().map(|v| v + shift).collect())?,
    };
    Ok((coupling, duals))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
    /// Superdifferential slack of the extended potential.
    pub superdiff_slack: f64,
    /// `c(θ_i, y_j) − ψ(θ_i) − ψ⁰(y_j)` with the supplied duals.
    pub duality_gap: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub pairs: Vec<PairCheck>,
    pub max_slack: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub dual_feasibility_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Whether the base has zero mean, so that failure would also rule out optimality.
    pub necessity_applies: bool,
}

/// Check that every support pair of `coupling` lies in `∂^{Λ₀}ψ_ext`, where
/// `ψ_ext` is the backward transform of the target potential, tested over
/// the union of source and target atoms.
pub fn certify(coupling: &Coupling, duals: &DualPotentials, prob: &TransportProblem) -> Result<Certificate> {
    if coupling.shape() != prob.shape() {
        return Err(Error::Structural("coupling and problem have different shapes".into()));
    }
    let mut union: Vec<Point> = prob.source.atoms().to_vec();
    for y in prob.target.atoms() {
        if !union.iter().any(|p| max_norm_dist(p, y) <= 1e-12) {
            union.push(y.clone());
        }
    }
    let psi_ext = transform_bwd(&duals.psi0, &union, &prob.base)?.function;

    let pairs: Vec<PairCheck> = coupling
        .support(SUPPORT_THRESHOLD)
        .into_par_iter()
        .map(|(i, j, mass)| {
            let theta = &prob.source.atoms()[i];
            let y = &prob.target.atoms()[j];
            let sd = superdiff_check(&psi_ext, theta, y, &prob.base, CERTIFICATE_TOL)?;
            let gap = duality_gap(&duals.psi, &duals.psi0, theta, y, &prob.base)?;
            let slack = sd.slack.max(gap.abs());
            Ok(PairCheck { i, j, mass, superdiff_slack: sd.slack, duality_gap: gap, slack })
        })
        .collect::<Result<_>>()?;

    let (max_slack, worst_pair) = pairs
        .iter()
        .fold((0.0, None), |(best, arg), p| if p.slack > best { (p.slack, Some((p.i, p.j))) } else { (best, arg) });
    let necessity_applies = prob.base.mean().map(|m| m.iter().all(|x| x.abs() < 1e-12)).unwrap_or(false);
    Ok(Certificate {
        dual_feasibility_violation: duals.feasibility_violation(prob),
        pass: max_slack <= CERTIFICATE_TOL,
        tolerance: CERTIFICATE_TOL,
        max_slack,
        worst_pair,
        pairs,
        necessity_applies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MongeOutcome {
    /// `map[i]` is the target index receiving all of source atom `i`.
    Map(Vec<usize>),
    /// Rows whose mass is split (or absent), so no deterministic map exists.
    Refused { split_rows: Vec<usize> },
}

pub fn monge_extract(coupling: &Coupling) -> MongeOutcome {
    let (n, m) = coupling.shape();
    let mut map = Vec::with_capacity(n);
    let mut split = Vec::new();
    for i in 0..n {
        let hits: Vec<usize> = (0..m).filter(|&j| coupling.get(i, j) > MONGE_THRESHOLD).collect();
        if hits.len() == 1 {
            map.push(hits[0]);
        } else {
            split.push(i);
        }
    }
    if split.is_empty() {
        MongeOutcome::Map(map)
    } else {
        MongeOutcome::Refused { split_rows: split }
    }
}

//! Base measures, their cumulant generating functions and the natural
//! exponential family they generate.
//!
//! For a base measure μ₀ on ℝᵈ the CGF is `Λ₀(θ) = log μ₀(e^{⟨θ,x⟩})`, the
//! transport cost is `c(θ, y) = Λ₀(θ − y)`, and the tilted law μ_θ has
//! density `exp(⟨θ,x⟩ − Λ₀(θ))` against μ₀.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, FiniteMeasure, MeasureRep, NodeSet};
use crate::point::{dot, log_sum_exp, sub, Point};
use crate::quadrature::{gaussian_tensor_grid, MAX_TENSOR_DIM};

pub const DEFAULT_NODES_PER_AXIS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum BaseKind {
    /// `N(0, I_d)`: closed-form CGF, Gauss–Hermite nodes for expectations.
    Gaussian { nodes_per_axis: usize },
    Discrete(DiscreteMeasure),
    /// A user-supplied quadrature rule treated as a finitely supported measure.
    Quadrature,
}

#[derive(Debug, Clone)]
pub struct BaseMeasure {
    kind: BaseKind,
    dim: usize,
    nodes: Option<Arc<NodeSet>>,
    recentered_by: Option<Point>,
}

impl BaseMeasure {
    /// Standard Gaussian with the default node count.
    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::gaussian_with_nodes(dim, DEFAULT_NODES_PER_AXIS)
    }

    /// Standard Gaussian whose expectations use a tensor Gauss–Hermite grid.
    /// For `dim > 3` only the closed-form CGF and cost are available.
    pub fn gaussian_with_nodes(dim: usize, nodes_per_axis: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be at least 1".into()));
        }
        if nodes_per_axis == 0 {
            return Err(Error::Validation("need at least one node per axis".into()));
        }
        let nodes = if dim <= MAX_TENSOR_DIM {
            Some(Arc::new(gaussian_tensor_grid(dim, nodes_per_axis)?))
        } else {
            None
        };
        Ok(Self { kind: BaseKind::Gaussian { nodes_per_axis }, dim, nodes, recentered_by: None })
    }

    /// Uniform measure on `{e₀ = 0, e₁, …, e_d}` ⊂ ℝᵈ.
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be at least 1".into()));
        }
        let mut atoms = vec![vec![0.0; dim]];
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            atoms.push(e);
        }
        let m = DiscreteMeasure::uniform(atoms)?;
        let nodes = NodeSet::from_discrete(format!("simplex:{dim}"), &m)?;
        Ok(Self { kind: BaseKind::Discrete(m), dim, nodes: Some(Arc::new(nodes)), recentered_by: None })
    }

    pub fn discrete(m: DiscreteMeasure) -> Result<Self> {
        let dim = m.dim();
        let nodes = NodeSet::from_discrete(format!("discrete:{dim}:{}", m.len()), &m)?;
        Ok(Self { kind: BaseKind::Discrete(m), dim, nodes: Some(Arc::new(nodes)), recentered_by: None })
    }

    pub fn quadrature(nodes: NodeSet) -> Result<Self> {
        let dim = nodes.dim();
        Ok(Self { kind: BaseKind::Quadrature, dim, nodes: Some(Arc::new(nodes)), recentered_by: None })
    }

    /// Translate the support by minus its mean so that `Λ₀ ≥ 0`. The shift is
    /// kept in [`BaseMeasure::recentered_by`].
    pub fn recentered(&self) -> Result<Self> {
        let mean = self.mean()?;
        let shift = |pts: &[Point]| -> Vec<Point> { pts.iter().map(|p| sub(p, &mean)).collect() };
        let total_shift = match &self.recentered_by {
            Some(prev) => crate::point::add(prev, &mean),
            None => mean.clone(),
        };
        let mut out = match &self.kind {
            BaseKind::Gaussian { .. } => self.clone(),
            BaseKind::Discrete(m) => {
                let m2 = DiscreteMeasure::new(shift(m.atoms()), m.weights().to_vec())?;
                let label = format!("{}:centered", self.node_set()?.label());
                let nodes = NodeSet::from_discrete(label, &m2)?;
                Self {
                    kind: BaseKind::Discrete(m2),
                    dim: self.dim,
                    nodes: Some(Arc::new(nodes)),
                    recentered_by: None,
                }
            }
            BaseKind::Quadrature => {
                let ns = self.node_set()?;
                let nodes = NodeSet::new(
                    format!("{}:centered", ns.label()),
                    shift(ns.nodes()),
                    ns.node_weights().to_vec(),
                )?;
                Self { kind: BaseKind::Quadrature, dim: self.dim, nodes: Some(Arc::new(nodes)), recentered_by: None }
            }
        };
        out.recentered_by = Some(total_shift);
        Ok(out)
    }

    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn recentered_by(&self) -> Option<&[f64]> {
        self.recentered_by.as_deref()
    }

    pub fn is_quadrature_backed(&self) -> bool {
        matches!(self.kind, BaseKind::Gaussian { .. })
    }

    /// Node set carrying μ₀-expectations.
    pub fn node_set(&self) -> Result<&Arc<NodeSet>> {
        self.nodes.as_ref().ok_or_else(|| {
            Error::Validation(format!(
                "no quadrature nodes for a {}-dimensional Gaussian (tensor grids need d <= {MAX_TENSOR_DIM})",
                self.dim
            ))
        })
    }

    pub fn mean(&self) -> Result<Point> {
        match self.kind {
            BaseKind::Gaussian { .. } => Ok(vec![0.0; self.dim]),
            _ => Ok(self.node_set()?.mean()),
        }
    }

    fn check_dim(&self, field: &'static str, p: &[f64]) -> Result<()> {
        if p.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { field, expected: self.dim, found: p.len() })
        }
    }

    /// `Λ₀(θ)`.
    pub fn cgf(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim);
        match self.kind {
            BaseKind::Gaussian { .. } => 0.5 * dot(theta, theta),
            _ => self.nodes.as_ref().expect("finite bases carry nodes").log_exp_moment(theta),
        }
    }

    /// Checked `Λ₀(θ)`.
    pub fn cgf_eval(&self, theta: &[f64]) -> Result<f64> {
        self.check_dim("theta", theta)?;
        Ok(self.cgf(theta))
    }

    /// `∇Λ₀(θ)`, the mean of μ_θ.
    pub fn cgf_grad(&self, theta: &[f64]) -> Result<Point> {
        self.check_dim("theta", theta)?;
        match self.kind {
            BaseKind::Gaussian { .. } => Ok(theta.to_vec()),
            _ => Ok(self.tilt(theta)?.mean()),
        }
    }

    /// The cost `c(θ, y) = Λ₀(θ − y)`.
    pub fn cost(&self, theta: &[f64], y: &[f64]) -> f64 {
        self.cgf(&sub(theta, y))
    }

    pub fn cost_eval(&self, theta: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim("theta", theta)?;
        self.check_dim("y", y)?;
        Ok(self.cost(theta, y))
    }

    /// `log dμ_θ/dμ₀` at every node, normalized over the node set.
    pub fn tilt_log_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_dim("theta", theta)?;
        let ns = self.node_set()?;
        let exps: Vec<f64> = ns.nodes().iter().map(|x| dot(theta, x)).collect();
        let log_norm = log_sum_exp(exps.iter().zip(ns.node_weights()).map(|(e, w)| e + w.ln()));
        Ok(exps.into_iter().map(|e| e - log_norm).collect())
    }

    /// The exponential-family member μ_θ as a density on the base nodes.
    pub fn tilt(&self, theta: &[f64]) -> Result<MeasureRep> {
        let log_density = self.tilt_log_density(theta)?;
        let density = log_density.into_iter().map(f64::exp).collect();
        MeasureRep::normalized(self.node_set()?.clone(), density)
    }

    /// `log μ_θ(e^{⟨γ,x⟩})` evaluated through the tilted measure.
    pub fn tilt_logmoment(&self, theta: &[f64], gamma: &[f64]) -> Result<f64> {
        self.check_dim("gamma", gamma)?;
        let log_density = self.tilt_log_density(theta)?;
        let ns = self.node_set()?;
        Ok(log_sum_exp(
            ns.nodes()
                .iter()
                .zip(ns.node_weights())
                .zip(&log_density)
                .map(|((x, w), ld)| dot(gamma, x) + w.ln() + ld),
        ))
    }

    /// Serializable description of this base.
    pub fn to_wire(&self) -> BaseWire {
        let payload = match &self.kind {
            BaseKind::Gaussian { nodes_per_axis } => {
                BasePayload::Gaussian { nodes_per_axis: Some(*nodes_per_axis) }
            }
            BaseKind::Discrete(m) => {
                BasePayload::Discrete { atoms: m.atoms().to_vec(), weights: m.weights().to_vec() }
            }
            BaseKind::Quadrature => {
                let ns = self.nodes.as_ref().expect("quadrature base has nodes");
                BasePayload::Quadrature {
                    label: Some(ns.label().to_string()),
                    nodes: ns.nodes().to_vec(),
                    node_weights: ns.node_weights().to_vec(),
                }
            }
        };
        BaseWire { d: self.dim, recenter: false, payload, recentered_by: self.recentered_by.clone() }
    }

    pub fn from_wire(w: BaseWire) -> Result<Self> {
        let base = match w.payload {
            BasePayload::Gaussian { nodes_per_axis } => {
                Self::gaussian_with_nodes(w.d, nodes_per_axis.unwrap_or(DEFAULT_NODES_PER_AXIS))?
            }
            BasePayload::Discrete { atoms, weights } => Self::discrete(DiscreteMeasure::new(atoms, weights)?)?,
            BasePayload::Quadrature { label, nodes, node_weights } => {
                Self::quadrature(NodeSet::new(label.unwrap_or_else(|| "quadrature".into()), nodes, node_weights)?)?
            }
        };
        if base.dim != w.d {
            return Err(Error::DimensionMismatch { field: "d", expected: base.dim, found: w.d });
        }
        if w.recenter {
            base.recentered()
        } else {
            Ok(base)
        }
    }
}

/// JSON shape: `{"kind": "gaussian"|"discrete"|"quadrature", "d": n, ...payload}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseWire {
    pub d: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub recenter: bool,
    #[serde(flatten)]
    pub payload: BasePayload,
    /// Metadata only: the shift applied by recentering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recentered_by: Option<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BasePayload {
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nodes_per_axis: Option<usize>,
    },
    Discrete {
        atoms: Vec<Point>,
        weights: Vec<f64>,
    },
    Quadrature {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        nodes: Vec<Point>,
        node_weights: Vec<f64>,
    },
}

/// A member μ_θ of the natural exponential family over `base`.
#[derive(Debug, Clone)]
pub struct ExpFamilyPoint {
    pub base: BaseMeasure,
    pub theta: Point,
}

impl ExpFamilyPoint {
    pub fn new(base: BaseMeasure, theta: Point) -> Result<Self> {
        base.check_dim("theta", &theta)?;
        Ok(Self { base, theta })
    }

    pub fn realize(&self) -> Result<MeasureRep> {
        self.base.tilt(&self.theta)
    }
}

//! Probability measures with finite support: plain discrete measures, quadrature
//! node sets standing in for a continuous base measure, and measures given by
//! their density against such a node set.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{dot, log_sum_exp_argmax, max_norm_dist, Point};

/// Total-mass tolerance for discrete measures.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Total-mass tolerance for quadrature weights and densities.
pub const NODE_SUM_TOL: f64 = 1e-10;
/// Two atoms closer than this in the max norm are considered equal.
pub const ATOM_DISTINCT_TOL: f64 = 1e-12;

fn check_points(points: &[Point], field: &'static str) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::Validation(format!("`{field}` is empty")));
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::Validation(format!("`{field}` has zero-dimensional points")));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { field, expected: dim, found: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation(format!("`{field}` contains a non-finite coordinate")));
        }
    }
    Ok(dim)
}

fn check_distinct(points: &[Point], field: &'static str) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if points[b][0] - points[a][0] > ATOM_DISTINCT_TOL {
                break;
            }
            if max_norm_dist(&points[a], &points[b]) <= ATOM_DISTINCT_TOL {
                return Err(Error::Validation(format!(
                    "`{field}` entries {} and {} coincide",
                    a.min(b),
                    a.max(b)
                )));
            }
        }
    }
    Ok(())
}

/// Anything with finitely many weighted support points.
pub trait FiniteMeasure {
    fn points(&self) -> &[Point];

    /// Probability mass carried by support point `k`.
    fn mass(&self, k: usize) -> f64;

    fn dim(&self) -> usize {
        self.points()[0].len()
    }

    /// `log ν(e^{⟨θ,x⟩})`, accumulated with max-subtraction.
    fn log_exp_moment(&self, theta: &[f64]) -> f64 {
        self.log_moment_with(|x| dot(theta, x)).0
    }

    /// `log Σ_k mass_k · exp(f(x_k))` and the index of the dominating term.
    fn log_moment_with<F: Fn(&[f64]) -> f64>(&self, f: F) -> (f64, usize) {
        let terms: Vec<f64> = (0..self.points().len())
            .map(|k| {
                let m = self.mass(k);
                if m > 0.0 {
                    f(&self.points()[k]) + m.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        log_sum_exp_argmax(&terms)
    }

    /// `ν(e^{⟨θ,x⟩})`.
    fn exp_moment(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                field: "theta",
                expected: self.dim(),
                found: theta.len(),
            });
        }
        finite_exp(self.log_moment_with(|x| dot(theta, x)))
    }

    /// The seminorm `ν(e^{j|x_axis|})` (axis is zero-based).
    fn seminorm(&self, axis: usize, j: u32) -> Result<f64> {
        if axis >= self.dim() {
            return Err(Error::Validation(format!(
                "axis {axis} out of range for dimension {}",
                self.dim()
            )));
        }
        finite_exp(self.log_moment_with(|x| j as f64 * x[axis].abs()))
    }

    fn mean(&self) -> Point {
        let mut m = vec![0.0; self.dim()];
        for (k, x) in self.points().iter().enumerate() {
            let w = self.mass(k);
            for (mi, xi) in m.iter_mut().zip(x) {
                *mi += w * xi;
            }
        }
        m
    }
}

fn finite_exp((log_value, node): (f64, usize)) -> Result<f64> {
    let v = log_value.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Magnitude { node, log_value })
    }
}

/// A probability measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteWire")]
pub struct DiscreteMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct DiscreteWire {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl TryFrom<DiscreteWire> for DiscreteMeasure {
    type Error = Error;
    fn try_from(w: DiscreteWire) -> Result<Self> {
        DiscreteMeasure::new(w.atoms, w.weights)
    }
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        check_points(&atoms, "atoms")?;
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                field: "weights",
                expected: atoms.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Validation(format!("weights sum to {total}, not 1")));
        }
        check_distinct(&atoms, "atoms")?;
        Ok(Self { atoms, weights })
    }

    /// Uniform weights over the given atoms.
    pub fn uniform(atoms: Vec<Point>) -> Result<Self> {
        let n = atoms.len().max(1);
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    /// Rescales nonnegative weights to total mass one before validating.
    pub fn normalized(atoms: Vec<Point>, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Validation("weights must have positive finite total".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(atoms, weights)
    }

    pub fn point_mass(atom: Point) -> Result<Self> {
        Self::new(vec![atom], vec![1.0])
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl FiniteMeasure for DiscreteMeasure {
    fn points(&self) -> &[Point] {
        &self.atoms
    }
    fn mass(&self, k: usize) -> f64 {
        self.weights[k]
    }
}

/// Quadrature nodes standing in for expectations under a base measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NodeSetWire")]
pub struct NodeSet {
    label: String,
    nodes: Vec<Point>,
    node_weights: Vec<f64>,
}

#[derive(Deserialize)]
struct NodeSetWire {
    #[serde(default = "default_label")]
    label: String,
    nodes: Vec<Point>,
    node_weights: Vec<f64>,
}

fn default_label() -> String {
    "quadrature".into()
}

impl TryFrom<NodeSetWire> for NodeSet {
    type Error = Error;
    fn try_from(w: NodeSetWire) -> Result<Self> {
        NodeSet::new(w.label, w.nodes, w.node_weights)
    }
}

impl NodeSet {
    pub fn new(label: impl Into<String>, nodes: Vec<Point>, node_weights: Vec<f64>) -> Result<Self> {
        check_points(&nodes, "nodes")?;
        if nodes.len() != node_weights.len() {
            return Err(Error::DimensionMismatch {
                field: "node_weights",
                expected: nodes.len(),
                found: node_weights.len(),
            });
        }
        if node_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Validation("node weights must be finite and positive".into()));
        }
        let total: f64 = node_weights.iter().sum();
        if (total - 1.0).abs() > NODE_SUM_TOL {
            return Err(Error::Validation(format!("node weights sum to {total}, not 1")));
        }
        Ok(Self { label: label.into(), nodes, node_weights })
    }

    /// Node set carrying the positive-mass atoms of a discrete measure.
    pub fn from_discrete(label: impl Into<String>, m: &DiscreteMeasure) -> Result<Self> {
        let (nodes, weights): (Vec<Point>, Vec<f64>) = m
            .atoms()
            .iter()
            .zip(m.weights())
            .filter(|(_, w)| **w > 0.0)
            .map(|(a, w)| (a.clone(), *w))
            .unzip();
        Self::new(label, nodes, weights)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of `p` among the nodes, if present (max-norm tolerance).
    pub fn position(&self, p: &[f64]) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.len() == p.len() && max_norm_dist(n, p) <= ATOM_DISTINCT_TOL)
    }
}

impl FiniteMeasure for NodeSet {
    fn points(&self) -> &[Point] {
        &self.nodes
    }
    fn mass(&self, k: usize) -> f64 {
        self.node_weights[k]
    }
}

/// A probability measure `ν ≪ μ₀`, stored as `dν/dμ₀` on the base nodes.
#[derive(Debug, Clone)]
pub struct MeasureRep {
    base: Arc<NodeSet>,
    density: Vec<f64>,
}

/// JSON form: `{"base": "<node set label>", "density": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureRepWire {
    pub base: String,
    pub density: Vec<f64>,
}

impl MeasureRep {
    pub fn new(base: Arc<NodeSet>, density: Vec<f64>) -> Result<Self> {
        if density.len() != base.len() {
            return Err(Error::DimensionMismatch {
                field: "density",
                expected: base.len(),
                found: density.len(),
            });
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::Validation("density must be finite and nonnegative".into()));
        }
        let total: f64 = base.node_weights().iter().zip(&density).map(|(w, d)| w * d).sum();
        if (total - 1.0).abs() > NODE_SUM_TOL {
            return Err(Error::Validation(format!("density integrates to {total}, not 1")));
        }
        Ok(Self { base, density })
    }

    /// Rescales a nonnegative density so that it integrates to one.
    pub fn normalized(base: Arc<NodeSet>, mut density: Vec<f64>) -> Result<Self> {
        if density.len() != base.len() {
            return Err(Error::DimensionMismatch {
                field: "density",
                expected: base.len(),
                found: density.len(),
            });
        }
        let total: f64 = base.node_weights().iter().zip(&density).map(|(w, d)| w * d).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Validation("density has no positive finite mass".into()));
        }
        density.iter_mut().for_each(|d| *d /= total);
        Self::new(base, density)
    }

    /// The base measure itself (density ≡ 1).
    pub fn base_measure(base: Arc<NodeSet>) -> Self {
        let density = vec![1.0; base.len()];
        Self { base, density }
    }

    /// Skips the total-mass check; for measures that are probability
    /// measures only up to quadrature error.
    pub(crate) fn from_raw(base: Arc<NodeSet>, density: Vec<f64>) -> Self {
        debug_assert_eq!(base.len(), density.len());
        Self { base, density }
    }

    pub fn from_wire(wire: &MeasureRepWire, base: &Arc<NodeSet>) -> Result<Self> {
        if wire.base != base.label() {
            return Err(Error::Structural(format!(
                "measure refers to base `{}` but `{}` was supplied",
                wire.base,
                base.label()
            )));
        }
        Self::new(base.clone(), wire.density.clone())
    }

    pub fn to_wire(&self) -> MeasureRepWire {
        MeasureRepWire { base: self.base.label().to_string(), density: self.density.clone() }
    }

    pub fn base(&self) -> &Arc<NodeSet> {
        &self.base
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn shares_base(&self, other: &MeasureRep) -> bool {
        Arc::ptr_eq(&self.base, &other.base) || *self.base == *other.base
    }

    /// Atoms and masses as an explicit discrete measure (zero-mass nodes dropped).
    pub fn to_discrete(&self) -> Result<DiscreteMeasure> {
        let (atoms, weights): (Vec<Point>, Vec<f64>) = (0..self.base.len())
            .filter(|&k| self.mass(k) > 0.0)
            .map(|k| (self.base.nodes()[k].clone(), self.mass(k)))
            .unzip();
        DiscreteMeasure::normalized(atoms, weights)
    }
}

impl FiniteMeasure for MeasureRep {
    fn points(&self) -> &[Point] {
        self.base.nodes()
    }
    fn mass(&self, k: usize) -> f64 {
        self.base.node_weights()[k] * self.density[k]
    }
}

fn require_same_base(mu: &MeasureRep, nu: &MeasureRep) -> Result<()> {
    if mu.shares_base(nu) {
        Ok(())
    } else {
        Err(Error::Structural(format!(
            "node sets `{}` and `{}` differ",
            mu.base.label(),
            nu.base.label()
        )))
    }
}

/// The path point `(1−t)·μ + t·ν`.
pub fn mixture(mu: &MeasureRep, nu: &MeasureRep, t: f64) -> Result<MeasureRep> {
    require_same_base(mu, nu)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Validation(format!("mixture weight {t} outside [0, 1]")));
    }
    let density = mu
        .density
        .iter()
        .zip(&nu.density)
        .map(|(a, b)| (1.0 - t) * a + t * b)
        .collect();
    Ok(MeasureRep { base: mu.base.clone(), density })
}

/// Total variation distance `½ Σ w_k |d_μ,k − d_ν,k|`.
pub fn tv_distance(mu: &MeasureRep, nu: &MeasureRep) -> Result<f64> {
    require_same_base(mu, nu)?;
    Ok(0.5
        * mu.base
            .node_weights()
            .iter()
            .zip(mu.density.iter().zip(&nu.density))
            .map(|(w, (a, b))| w * (a - b).abs())
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gaussian_tensor_grid;

    fn two_node() -> Arc<NodeSet> {
        Arc::new(NodeSet::new("pair", vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap())
    }

    #[test]
    fn exp_moment_of_point_mass_at_origin() {
        let m = DiscreteMeasure::point_mass(vec![0.0, 0.0]).unwrap();
        assert_eq!(m.exp_moment(&[3.0, -7.0]).unwrap(), 1.0);
    }

    #[test]
    fn exp_moment_uniform_simplex_vertices() {
        let m = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        let v = m.exp_moment(&[2f64.ln(), 3f64.ln()]).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exp_moment_gauss_hermite_mgf() {
        let base = Arc::new(gaussian_tensor_grid(1, 20).unwrap());
        let nu = MeasureRep::base_measure(base);
        let v = nu.exp_moment(&[1.0]).unwrap();
        assert!((v - 0.5f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn exp_moment_reports_overflow_node() {
        let m = DiscreteMeasure::uniform(vec![vec![0.0], vec![1000.0]]).unwrap();
        match m.exp_moment(&[1.0]) {
            Err(Error::Magnitude { node, .. }) => assert_eq!(node, 1),
            other => panic!("expected magnitude error, got {other:?}"),
        }
        // the log-space value is still available
        assert!((m.log_exp_moment(&[1.0]) - (1000.0 - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn seminorm_examples() {
        let m = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(m.seminorm(0, 0).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert!((m.seminorm(0, 1).unwrap() - (1.0 + e) / 2.0).abs() < 1e-14);
        let p = DiscreteMeasure::point_mass(vec![2.0, 0.0]).unwrap();
        assert!((p.seminorm(0, 2).unwrap() - 4f64.exp()).abs() < 1e-10);
        assert!(p.seminorm(2, 1).is_err());
    }

    #[test]
    fn mixture_endpoints_and_midpoint() {
        let base = two_node();
        let mu = MeasureRep::new(base.clone(), vec![2.0, 0.0]).unwrap();
        let nu = MeasureRep::new(base.clone(), vec![0.0, 2.0]).unwrap();
        assert_eq!(mixture(&mu, &nu, 0.0).unwrap().density(), mu.density());
        assert_eq!(mixture(&mu, &nu, 1.0).unwrap().density(), nu.density());
        assert_eq!(mixture(&mu, &nu, 0.5).unwrap().density(), &[1.0, 1.0]);
        assert!(mixture(&mu, &nu, 1.5).is_err());
    }

    #[test]
    fn mixture_rejects_foreign_base() {
        let a = MeasureRep::base_measure(two_node());
        let other = Arc::new(NodeSet::new("other", vec![vec![0.0], vec![2.0]], vec![0.5, 0.5]).unwrap());
        let b = MeasureRep::base_measure(other);
        assert!(matches!(mixture(&a, &b, 0.5), Err(Error::Structural(_))));
        assert!(matches!(tv_distance(&a, &b), Err(Error::Structural(_))));
    }

    #[test]
    fn tv_examples() {
        let base = two_node();
        let a = MeasureRep::new(base.clone(), vec![2.0, 0.0]).unwrap();
        let b = MeasureRep::new(base.clone(), vec![1.0, 1.0]).unwrap();
        let c = MeasureRep::new(base.clone(), vec![0.0, 2.0]).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert!((tv_distance(&a, &c).unwrap() - 1.0).abs() < 1e-15);
        assert!((tv_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn discrete_validation() {
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![], vec![]).is_err());
    }

    #[test]
    fn json_forms() {
        let m: DiscreteMeasure =
            serde_json::from_str(r#"{"atoms": [[0.0], [1.0]], "weights": [0.25, 0.75]}"#).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.75]);
        let bad = serde_json::from_str::<DiscreteMeasure>(r#"{"atoms": [[0.0]], "weights": [0.5]}"#);
        assert!(bad.is_err());

        let base = two_node();
        let rep = MeasureRep::new(base.clone(), vec![1.5, 0.5]).unwrap();
        let s = serde_json::to_string(&rep.to_wire()).unwrap();
        assert_eq!(s, r#"{"base":"pair","density":[1.5,0.5]}"#);
        let wire: MeasureRepWire = serde_json::from_str(&s).unwrap();
        assert_eq!(MeasureRep::from_wire(&wire, &base).unwrap().density(), rep.density());
    }
}

//! Λ₀-concave functions on finite grids.
//!
//! A [`GridFn`] is a function ℝᵈ → ℝ ∪ {−∞} known on finitely many points. The
//! forward transform is `ψ⁰(y) = min_x [Λ₀(x − y) − ψ(x)]` and the backward
//! transform is `ψ(x) = min_y [Λ₀(x − y) − ρ(y)]`; both infima run over the
//! supplied grid only, so truncation shows up as argmins on the grid boundary.

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cgf::BaseMeasure;
use crate::error::{Error, Result};
use crate::point::{max_norm_dist, Point};

/// Default tolerance for slack and duality-gap acceptance.
pub const DEFAULT_CHECK_TOL: f64 = 1e-8;
/// Default Lipschitz bound in the grid tolerance `L·h + h²`.
pub const DEFAULT_LIPSCHITZ: f64 = 10.0;

const GRID_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    grid: Vec<Point>,
    values: Vec<f64>,
}

impl GridFn {
    /// Values may be `-inf`; `+inf` and NaN are rejected.
    pub fn new(grid: Vec<Point>, values: Vec<f64>) -> Result<Self> {
        let Some(first) = grid.first() else {
            return Err(Error::Validation("grid is empty".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Validation("grid points must have positive dimension".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch { field: "values", expected: grid.len(), found: values.len() });
        }
        for p in &grid {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { field: "grid", expected: dim, found: p.len() });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation("grid contains a non-finite coordinate".into()));
            }
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::Validation("values must be real or -inf".into()));
        }
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&a, &b| grid[a][0].total_cmp(&grid[b][0]));
        for (k, &a) in order.iter().enumerate() {
            for &b in &order[k + 1..] {
                if grid[b][0] - grid[a][0] > GRID_MATCH_TOL {
                    break;
                }
                if max_norm_dist(&grid[a], &grid[b]) <= GRID_MATCH_TOL {
                    return Err(Error::Validation(format!("grid points {} and {} coincide", a.min(b), a.max(b))));
                }
            }
        }
        Ok(Self { grid, values })
    }

    /// Tabulate `f` on `grid`.
    pub fn from_fn(grid: Vec<Point>, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = grid.iter().map(|p| f(p)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[Point] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.grid[0].len()
    }

    pub fn is_proper(&self) -> bool {
        self.values.iter().any(|v| v.is_finite())
    }

    fn require_proper(&self) -> Result<()> {
        if self.is_proper() {
            Ok(())
        } else {
            Err(Error::Improper)
        }
    }

    pub fn index_of(&self, p: &[f64]) -> Option<usize> {
        self.grid
            .iter()
            .position(|g| g.len() == p.len() && max_norm_dist(g, p) <= GRID_MATCH_TOL)
    }

    pub fn lookup(&self, p: &[f64]) -> Result<usize> {
        self.index_of(p).ok_or_else(|| Error::GridLookup { point: p.to_vec() })
    }

    pub fn value_at(&self, p: &[f64]) -> Result<f64> {
        Ok(self.values[self.lookup(p)?])
    }

    /// `ψ + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v + c).collect() }
    }

    /// Whether grid point `k` lies on a face of the grid's bounding box.
    pub fn on_boundary(&self, k: usize) -> bool {
        on_bounding_box(&self.grid, k)
    }
}

fn on_bounding_box(grid: &[Point], k: usize) -> bool {
    let p = &grid[k];
    (0..p.len()).any(|axis| {
        let (lo, hi) = grid
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q[axis]), hi.max(q[axis])));
        (p[axis] - lo).abs() <= GRID_MATCH_TOL || (hi - p[axis]).abs() <= GRID_MATCH_TOL
    })
}

#[derive(Serialize, Deserialize)]
struct GridFnWire {
    grid: Vec<Point>,
    #[serde(serialize_with = "ser_values", deserialize_with = "de_values")]
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum WireValue {
    Num(f64),
    Sentinel(String),
}

fn ser_values<S: Serializer>(values: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let wire: Vec<WireValue> = values
        .iter()
        .map(|&v| if v == f64::NEG_INFINITY { WireValue::Sentinel("-inf".into()) } else { WireValue::Num(v) })
        .collect();
    wire.serialize(s)
}

fn de_values<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let wire = Vec::<WireValue>::deserialize(d)?;
    wire.into_iter()
        .map(|w| match w {
            WireValue::Num(v) => Ok(v),
            WireValue::Sentinel(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            WireValue::Sentinel(s) => Err(serde::de::Error::custom(format!("unknown value `{s}`, expected a number or \"-inf\""))),
        })
        .collect()
}

impl Serialize for GridFn {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridFnWire { grid: self.grid.clone(), values: self.values.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridFn {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let w = GridFnWire::deserialize(d)?;
        GridFn::new(w.grid, w.values).map_err(serde::de::Error::custom)
    }
}

/// Output of a grid transform: the new function, the input index attaining
/// each infimum (smallest index on ties), and outputs whose argmin sits on the
/// input grid's boundary.
#[derive(Debug, Clone)]
pub struct Transform {
    pub function: GridFn,
    pub argmin: Vec<usize>,
    pub boundary_hits: Vec<usize>,
}

fn infimum_transform(
    input: &GridFn,
    out_grid: &[Point],
    cost: impl Fn(&[f64], &[f64]) -> f64 + Sync,
) -> Result<Transform> {
    input.require_proper()?;
    if let Some(p) = out_grid.iter().find(|p| p.len() != input.dim()) {
        return Err(Error::DimensionMismatch { field: "output grid", expected: input.dim(), found: p.len() });
    }
    let rows: Vec<(f64, usize)> = out_grid
        .par_iter()
        .map(|out| {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (k, (p, v)) in input.grid.iter().zip(&input.values).enumerate() {
                if *v == f64::NEG_INFINITY {
                    continue;
                }
                let val = cost(p, out) - v;
                if val < best {
                    best = val;
                    arg = k;
                }
            }
            (best, arg)
        })
        .collect();
    let (values, argmin): (Vec<f64>, Vec<usize>) = rows.into_iter().unzip();
    let boundary_hits = argmin
        .iter()
        .enumerate()
        .filter(|(_, &a)| input.on_boundary(a))
        .map(|(k, _)| k)
        .collect();
    Ok(Transform { function: GridFn::new(out_grid.to_vec(), values)?, argmin, boundary_hits })
}

/// `ψ⁰(y) = min_x [Λ₀(x − y) − ψ(x)]` on `y_grid`.
pub fn transform_fwd(psi: &GridFn, y_grid: &[Point], base: &BaseMeasure) -> Result<Transform> {
    check_base_dim(base, psi)?;
    infimum_transform(psi, y_grid, |x, y| base.cost(x, y))
}

/// `ψ(x) = min_y [Λ₀(x − y) − ρ(y)]` on `x_grid`.
pub fn transform_bwd(rho: &GridFn, x_grid: &[Point], base: &BaseMeasure) -> Result<Transform> {
    check_base_dim(base, rho)?;
    infimum_transform(rho, x_grid, |y, x| base.cost(x, y))
}

fn check_base_dim(base: &BaseMeasure, f: &GridFn) -> Result<()> {
    if base.dim() == f.dim() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { field: "grid", expected: base.dim(), found: f.dim() })
    }
}

/// Outcome of testing `(θ, y) ∈ ∂^{Λ₀}ψ` over the grid of ψ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperdiffPair {
    pub theta: Point,
    pub y: Point,
    /// `max_v [ψ(v) − ψ(θ) − Λ₀(v − y) + Λ₀(θ − y)]₊`
    pub slack: f64,
    pub tolerance: f64,
    pub accepted: bool,
}

pub fn superdiff_check(psi: &GridFn, theta: &[f64], y: &[f64], base: &BaseMeasure, tol: f64) -> Result<SuperdiffPair> {
    check_base_dim(base, psi)?;
    if y.len() != base.dim() {
        return Err(Error::DimensionMismatch { field: "y", expected: base.dim(), found: y.len() });
    }
    let at = psi.values[psi.lookup(theta)?];
    if !at.is_finite() {
        return Err(Error::Precondition { what: "psi(theta) must be finite".into(), residual: f64::INFINITY });
    }
    let anchor = base.cost(theta, y);
    let slack = psi
        .grid
        .iter()
        .zip(&psi.values)
        .filter(|(_, v)| v.is_finite())
        .map(|(v, pv)| pv - at - base.cost(v, y) + anchor)
        .fold(0.0, f64::max);
    Ok(SuperdiffPair { theta: theta.to_vec(), y: y.to_vec(), slack, tolerance: tol, accepted: slack <= tol })
}

/// `Λ₀(θ − y) − ψ(θ) − ψ⁰(y)`.
pub fn duality_gap(psi: &GridFn, psi0: &GridFn, theta: &[f64], y: &[f64], base: &BaseMeasure) -> Result<f64> {
    let a = psi.value_at(theta)?;
    let b = psi0.value_at(y)?;
    Ok(base.cost_eval(theta, y)? - a - b)
}

/// Indices of `psi0` grid points `y` with `|duality_gap(α, y)| ≤ tol`.
pub fn superdiff_pairs(psi: &GridFn, psi0: &GridFn, alpha: &[f64], base: &BaseMeasure, tol: f64) -> Result<Vec<usize>> {
    let a = psi.value_at(alpha)?;
    Ok(psi0
        .grid
        .iter()
        .zip(&psi0.values)
        .enumerate()
        .filter(|(_, (y, v))| v.is_finite() && (base.cost(alpha, y) - a - **v).abs() <= tol)
        .map(|(k, _)| k)
        .collect())
}

/// Double-transform residual `max(ψ^{00} − ψ)₊ + max(ψ − ψ^{00})₊` with the
/// conjugate taken on ψ's own grid.
pub fn concavity_residual(psi: &GridFn, base: &BaseMeasure) -> Result<f64> {
    concavity_residual_on(psi, psi.grid(), base)
}

/// As [`concavity_residual`], with the conjugate tabulated on `y_grid`.
pub fn concavity_residual_on(psi: &GridFn, y_grid: &[Point], base: &BaseMeasure) -> Result<f64> {
    let conj = transform_fwd(psi, y_grid, base)?;
    let back = transform_bwd(&conj.function, psi.grid(), base)?;
    let (mut over, mut under) = (0.0f64, 0.0f64);
    for (dd, v) in back.function.values.iter().zip(&psi.values) {
        if *v == f64::NEG_INFINITY {
            // ψ = −∞ off its effective domain: only a finite double transform there is a violation
            if dd.is_finite() {
                over = f64::INFINITY;
            }
            continue;
        }
        over = over.max(dd - v);
        under = under.max(v - dd);
    }
    Ok(over.max(0.0) + under.max(0.0))
}

/// Largest nearest-neighbour distance between grid points.
pub fn grid_spacing(grid: &[Point]) -> f64 {
    if grid.len() < 2 {
        return 0.0;
    }
    grid.par_iter()
        .enumerate()
        .map(|(i, p)| {
            grid.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .reduce(|| 0.0, f64::max)
}

/// Truncation tolerance `L·h + h²` for a grid with spacing `h`.
pub fn grid_tolerance(grid: &[Point], lipschitz: f64) -> f64 {
    let h = grid_spacing(grid);
    lipschitz * h + h * h
}

/// Evenly spaced one-dimensional grid `lo, lo + h, …, hi`.
pub fn uniform_grid_1d(lo: f64, hi: f64, n: usize) -> Vec<Point> {
    assert!(n >= 2 && hi > lo);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| vec![lo + h * k as f64]).collect()
}

/// Tensor product of a 1-D grid over `dim` axes.
pub fn tensor_grid(axis: &[f64], dim: usize) -> Vec<Point> {
    let n = axis.len();
    (0..n.pow(dim as u32))
        .map(|mut flat| {
            let mut p = vec![0.0; dim];
            for slot in p.iter_mut().rev() {
                *slot = axis[flat % n];
                flat /= n;
            }
            p
        })
        .collect()
}

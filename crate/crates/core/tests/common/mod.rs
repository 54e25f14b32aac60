#![allow(dead_code)]

pub mod oracle;

use cgft::{BaseMeasure, DiscreteMeasure, NodeSet};
use proptest::prelude::*;

pub fn point(dim: usize, range: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-range..range, dim)
}

/// Discrete probability measure with `1..=max_atoms` distinct atoms in [-r, r]^d.
pub fn discrete_measure(dim: usize, max_atoms: usize, r: f64) -> impl Strategy<Value = DiscreteMeasure> {
    (1..=max_atoms)
        .prop_flat_map(move |n| {
            (prop::collection::vec(point(dim, r), n), prop::collection::vec(0.05f64..1.0, n))
        })
        .prop_filter_map("distinct atoms", |(atoms, w)| DiscreteMeasure::normalized(atoms, w).ok())
}

pub fn bases() -> Vec<(&'static str, BaseMeasure)> {
    let quad = NodeSet::new(
        "three-point",
        vec![vec![-1.0, 0.5], vec![0.25, -2.0], vec![2.0, 1.0]],
        vec![0.2, 0.5, 0.3],
    )
    .unwrap();
    vec![
        ("gaussian:1", BaseMeasure::gaussian_with_nodes(1, 40).unwrap()),
        ("simplex:2", BaseMeasure::simplex(2).unwrap()),
        ("simplex:5", BaseMeasure::simplex(5).unwrap()),
        ("quadrature", BaseMeasure::quadrature(quad).unwrap()),
    ]
}

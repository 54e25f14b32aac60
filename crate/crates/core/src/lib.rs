//! Optimal transport with costs `c(θ, y) = Λ₀(θ − y)` given by the cumulant
//! generating function of a base measure μ₀, and the embedding of
//! Λ₀-concave potentials as supergradients of exponentially concave
//! functions on measures absolutely continuous with respect to μ₀.
//!
//! Modules:
//!
//! - [`measures`]: discrete measures, quadrature node sets, densities
//! - [`cgf`]: base measures, Λ₀, costs and exponential tilting
//! - [`ctransform`]: Λ₀-transforms and superdifferentials on grids
//! - [`transport`]: exact and entropic solvers with optimality certificates
//! - [`embedding`]: exponentially concave functions, supergradient densities and portfolio maps

pub mod cgf;
pub mod ctransform;
pub mod embedding;
pub mod error;
pub mod measures;
pub mod point;
pub mod quadrature;
pub mod transport;

pub use cgf::{BaseKind, BaseMeasure, ExpFamilyPoint};

pub use ctransform::{GridFn, SuperdiffPair};
pub use error::{Error, Result};
pub use measures::{mixture, tv_distance, DiscreteMeasure, FiniteMeasure, MeasureRep, NodeSet};
pub use point::Point;
pub use transport::{Coupling, DualPotentials, TransportProblem};


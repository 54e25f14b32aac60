//! `--base` parsing: `gaussian:d[:nodes]`, `simplex:d[:centered]`, or a JSON file.

use std::path::Path;

use anyhow::{bail, Context, Result};
use cgft::cgf::BaseWire;
use cgft::embedding::MIN_GAUSSIAN_NODES;
use cgft::{BaseKind, BaseMeasure};

use crate::io::read_json;

pub fn parse_base(spec: &str) -> Result<BaseMeasure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let dim = |s: &str| -> Result<usize> {
        s.parse::<usize>().with_context(|| format!("base `{spec}`: dimension `{s}` is not a positive integer"))
    };
    match parts.as_slice() {
        ["gaussian", d] => Ok(BaseMeasure::gaussian(dim(d)?)?),
        ["gaussian", d, n] => {
            let n = n.parse::<usize>().with_context(|| format!("base `{spec}`: bad node count `{n}`"))?;
            Ok(BaseMeasure::gaussian_with_nodes(dim(d)?, n)?)
        }
        ["simplex", d] => Ok(BaseMeasure::simplex(dim(d)?)?),
        ["simplex", d, "centered"] => Ok(BaseMeasure::simplex(dim(d)?)?.recentered()?),
        ["gaussian" | "simplex", ..] => bail!("base `{spec}`: expected gaussian:d[:nodes] or simplex:d[:centered]"),
        _ => {
            let path = Path::new(spec);
            if !path.exists() {
                bail!("base `{spec}` is neither a known base spec nor an existing file");
            }
            let wire: BaseWire = read_json(path)?;
            BaseMeasure::from_wire(wire).with_context(|| format!("{}: invalid base", path.display()))
        }
    }
}

/// The embedding needs finer Gaussian quadrature than the transport code; raise
/// the node count when it is below the minimum.
pub fn for_embedding(base: BaseMeasure) -> Result<BaseMeasure> {
    match base.kind() {
        BaseKind::Gaussian { nodes_per_axis } if *nodes_per_axis < MIN_GAUSSIAN_NODES => {
            Ok(BaseMeasure::gaussian_with_nodes(base.dim(), MIN_GAUSSIAN_NODES)?)
        }
        _ => Ok(base),
    }
}

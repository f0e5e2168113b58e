//! Frank diagram `{p/γ(p)}` and Wulff shape `{q/γ*(q)}` as OBJ surfaces.

use std::path::Path;

use serde::Serialize;
use wulff_core::anisotropy::{AnisotropyDensity, DualEvaluator, GeodesicGrid};
use wulff_core::linalg::Vec3;
use wulff_core::mesh::format_obj;

use crate::error::{HarnessError, Result};
use crate::output;

/// Coarsest grid the dual evaluator accepts.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeSummary {
    pub density: String,
    pub resolution: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub frank_radius: [f64; 2],
    pub wulff_radius: [f64; 2],
}

pub struct Shapes {
    pub frank: Vec<Vec3<f64>>,
    pub wulff: Vec<Vec3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

fn radius_range(points: &[Vec3<f64>]) -> [f64; 2] {
    points.iter().map(|p| p.norm()).fold([f64::INFINITY, 0.0], |[lo, hi], r| [lo.min(r), hi.max(r)])
}

pub fn shapes(density: &AnisotropyDensity<f64>, resolution: usize) -> Result<Shapes> {
    let grid = GeodesicGrid::<f64>::new(resolution);
    let dual = DualEvaluator::new(density, resolution)?;
    let frank = grid.points.iter().map(|&p| Ok(p * (1.0 / density.evaluate(p)?))).collect::<Result<Vec<_>>>()?;
    let wulff = grid.points.iter().map(|&q| Ok(q * (1.0 / dual.evaluate(q)?))).collect::<Result<Vec<_>>>()?;
    Ok(Shapes { frank, wulff, triangles: grid.triangles })
}

/// Writes `frank.obj`, `wulff.obj` and `diag.json` into `out`.
pub fn write_shapes(key: &str, resolution: usize, out: &Path) -> Result<ShapeSummary> {
    if resolution < MIN_RESOLUTION {
        return Err(HarnessError::field("resolution", format!("must be at least {MIN_RESOLUTION}")));
    }
    let density = AnisotropyDensity::from_key(key).map_err(|e| HarnessError::field("density", e.to_string()))?;
    let s = shapes(&density, resolution)?;
    output::create_dir(out)?;
    output::write_text(&out.join("frank.obj"), &format_obj(&s.frank, &s.triangles))?;
    output::write_text(&out.join("wulff.obj"), &format_obj(&s.wulff, &s.triangles))?;
    let summary = ShapeSummary {
        density: key.to_string(),
        resolution,
        vertices: s.frank.len(),
        triangles: s.triangles.len(),
        frank_radius: radius_range(&s.frank),
        wulff_radius: radius_range(&s.wulff),
    };
    output::write_json(&out.join("diag.json"), &summary)?;
    Ok(summary)
}

//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wulff_core::anisotropy::{sample_unit_directions, AnisotropyDensity, KineticCoefficient};
use wulff_core::exact::{AdamsStart, LevelSetSolution};
use wulff_core::solver::SolverConfig;

use crate::error::{HarnessError, Result};

/// Initial surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    /// `x₁² + x₂²/ε² + x₃²/ε² = 1`, meshed from an icosphere; `ε = 1` is the
    /// unit sphere.
    Ellipsoid { eps: f64 },
    /// A closed OFF or OBJ mesh, read as given.
    Mesh { path: PathBuf },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Vtk,
    Obj,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceStart {
    Rk4,
    /// Adams–Bashforth steps of increasing order, like the BDF start-up.
    #[default]
    LowerOrder,
}

impl From<ReferenceStart> for AdamsStart {
    fn from(s: ReferenceStart) -> Self {
        match s {
            ReferenceStart::Rk4 => AdamsStart::RungeKutta4,
            ReferenceStart::LowerOrder => AdamsStart::LowerOrder,
        }
    }
}

/// Comparison against the self-similarly shrinking ellipsoid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSettings {
    /// Adams–Bashforth order of the reference trajectories; the BDF order
    /// when absent.
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default)]
    pub start: ReferenceStart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tolerance: default_tolerance(), max_iterations: None }
    }
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_kinetic() -> String {
    "one".into()
}

fn default_degree() -> usize {
    2
}

fn default_refinement() -> usize {
    3
}

fn default_order() -> usize {
    2
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Density key, e.g. `"hexagonal:0.1"`.
    pub density: String,
    /// `"one"` or `"inverse_gamma"`.
    #[serde(default = "default_kinetic")]
    pub kinetic: String,
    pub geometry: Geometry,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Icosphere refinement level for level-set geometries.
    #[serde(default = "default_refinement")]
    pub refinement: usize,
    /// BDF order.
    #[serde(default = "default_order")]
    pub order: usize,
    pub tau: f64,
    pub final_time: f64,
    #[serde(default)]
    pub stabilized: bool,
    #[serde(default)]
    pub normalize_normals: bool,
    /// Relative paths are taken relative to the config file.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub snapshot_format: SnapshotFormat,
    /// Write the final mass and stiffness matrices in MatrixMarket format.
    #[serde(default)]
    pub dump_matrices: bool,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub reference: Option<ReferenceSettings>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))
    }

    /// Reads, resolves relative paths against the file's directory and
    /// validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.output = base.join(&cfg.output);
        if let Geometry::Mesh { path } = &mut cfg.geometry {
            *path = base.join(&*path);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn density_fn(&self) -> Result<AnisotropyDensity<f64>> {
        AnisotropyDensity::from_key(&self.density).map_err(|e| HarnessError::field("density", e.to_string()))
    }

    pub fn kinetic_fn(&self) -> Result<KineticCoefficient<f64>> {
        let density = self.density_fn()?;
        KineticCoefficient::from_key(&self.kinetic, &density).map_err(|e| HarnessError::field("kinetic", e.to_string()))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { tolerance: self.solver.tolerance, max_iterations: self.solver.max_iterations, ..Default::default() }
    }

    /// The exact solution, when a reference comparison is configured.
    pub fn solution(&self) -> Option<LevelSetSolution<f64>> {
        match (&self.reference, &self.geometry) {
            (Some(_), Geometry::Ellipsoid { eps }) => LevelSetSolution::new(*eps).ok(),
            _ => None,
        }
    }

    pub fn reference_order(&self) -> usize {
        self.reference.as_ref().and_then(|r| r.order).unwrap_or(self.order)
    }

    pub fn validate(&self) -> Result<()> {
        let density = self.density_fn()?;
        let kinetic = self.kinetic_fn()?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(HarnessError::field("tau", "must be positive"));
        }
        if !(self.final_time >= 0.0 && self.final_time.is_finite()) {
            return Err(HarnessError::field("final_time", "must be non-negative"));
        }
        if !(1..=5).contains(&self.order) {
            return Err(HarnessError::field("order", "must lie in 1..=5"));
        }
        if !(1..=2).contains(&self.degree) {
            return Err(HarnessError::field("degree", "must be 1 or 2"));
        }
        if self.refinement > 7 {
            return Err(HarnessError::field("refinement", "at most 7"));
        }
        if !(self.solver.tolerance > 0.0 && self.solver.tolerance <= 1e-4) {
            return Err(HarnessError::field("solver.tolerance", "must lie in (0, 1e-4]"));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.final_time)) {
            return Err(HarnessError::field("snapshot_times", format!("{t} outside [0, final_time]")));
        }
        match &self.geometry {
            Geometry::Ellipsoid { eps } if !(*eps > 0.0 && eps.is_finite()) => {
                return Err(HarnessError::field("geometry.eps", "must be positive"));
            }
            Geometry::Mesh { path } if path.as_os_str().is_empty() => {
                return Err(HarnessError::field("geometry.path", "must not be empty"));
            }
            _ => {}
        }
        if let Some(reference) = &self.reference {
            let Geometry::Ellipsoid { eps } = self.geometry else {
                return Err(HarnessError::field("reference", "needs an ellipsoid geometry"));
            };
            if self.final_time >= 0.25 {
                return Err(HarnessError::field("final_time", "must stay below the blow-up time 0.25"));
            }
            if let Some(q) = reference.order {
                if !(1..=5).contains(&q) {
                    return Err(HarnessError::field("reference.order", "must lie in 1..=5"));
                }
            }
            let solution = LevelSetSolution::new(eps).map_err(|e| HarnessError::field("geometry.eps", e.to_string()))?;
            let matched = solution.density();
            for w in sample_unit_directions::<f64>(64, 7) {
                let g = matched.evaluate(w)?;
                if (density.evaluate(w)? - g).abs() > 1e-12 * g {
                    return Err(HarnessError::field("density", format!("reference needs ellipsoidal:1,{0},{0}", eps * eps)));
                }
                if (kinetic.kinetic(w)? * g - 1.0).abs() > 1e-12 {
                    return Err(HarnessError::field("kinetic", "reference needs inverse_gamma"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        density = "ellipsoidal:1,0.25,0.25"
        kinetic = "inverse_gamma"
        tau = 1e-3
        final_time = 0.1
        [geometry]
        kind = "ellipsoid"
        eps = 0.5
        [reference]
    "#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_toml(BASE).unwrap();
        assert_eq!((cfg.degree, cfg.refinement, cfg.order), (2, 3, 2));
        assert_eq!(cfg.reference_order(), 2);
        assert_eq!(cfg.solver.tolerance, 1e-10);
        cfg.validate().unwrap();
        assert!(cfg.solution().is_some());
    }

    #[test]
    fn field_errors_name_the_field() {
        let cases = [
            ("tau = 1e-3", "tau = -1.0", "tau"),
            ("final_time = 0.1", "final_time = 0.3", "final_time"),
            ("kinetic = \"inverse_gamma\"", "kinetic = \"one\"", "kinetic"),
            ("density = \"ellipsoidal:1,0.25,0.25\"", "density = \"cubic:0.01,30\"", "density"),
            ("density = \"ellipsoidal:1,0.25,0.25\"", "density = \"nonsense\"", "density"),
        ];
        for (from, to, field) in cases {
            let cfg = RunConfig::from_toml(&BASE.replace(from, to)).unwrap();
            match cfg.validate() {
                Err(HarnessError::Field { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = RunConfig::from_toml(&format!("bogus = 1\n{BASE}")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}

//! A single flow run: initial data, time stepping, logs and snapshots.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use wulff_core::assembly::{assemble_mass, assemble_stiffness};
use wulff_core::exact::{LevelSetSolution, ReferenceIntegrator};
use wulff_core::geometry::{discrete_anisotropic_mean_curvature, interpolated_normal_field};
use wulff_core::integrator::{energy_record, run, step_count, EnergyRecord, FlowProblem, FlowState};
use wulff_core::mesh::{
    elevate_to_quadratic, format_obj, format_vtk, generate_levelset_mesh, load_mesh, display_triangles, FEFunction,
    LevelSet, PointData, QuadricLevelSet, ReferenceElement, SurfaceMesh,
};
use wulff_core::FlowError;

use crate::config::{Geometry, RunConfig, SnapshotFormat};
use crate::error::{HarnessError, Result};
use crate::norms::{check_times, error_row, ErrorReport, ErrorRow};
use crate::output;

/// Initial mesh with nodal `ν⁰` and `V⁰`.
pub struct InitialData {
    pub mesh: SurfaceMesh<f64>,
    pub nu: FEFunction<f64>,
    pub v: FEFunction<f64>,
}

pub fn initial_data(cfg: &RunConfig) -> Result<InitialData> {
    let reference = Arc::new(ReferenceElement::with_default_quadrature(cfg.degree)?);
    let density = cfg.density_fn()?;
    let kinetic = cfg.kinetic_fn()?;
    let (mesh, levelset) = match &cfg.geometry {
        Geometry::Ellipsoid { eps } => {
            let ls = QuadricLevelSet::ellipsoid(*eps);
            (generate_levelset_mesh(&ls, cfg.refinement, reference)?, Some(ls))
        }
        Geometry::Mesh { path } => {
            let linear: SurfaceMesh<f64> = load_mesh(path).map_err(|e| HarnessError::field("geometry.path", e.to_string()))?;
            let mesh = if cfg.degree == 2 { elevate_to_quadratic(&linear, reference)? } else { linear };
            (mesh, None)
        }
    };
    if let Some(solution) = cfg.solution() {
        let (nu, v) = solution.exact_initial_data(&mesh)?;
        return Ok(InitialData { mesh, nu, v });
    }
    let ls = levelset.as_ref().map(|l| l as &dyn LevelSet<f64>);
    let nu = interpolated_normal_field(&mesh, ls)?;
    // β(ν⁰)V⁰ = −H_γ at the nodes
    let h = discrete_anisotropic_mean_curvature(&mesh, &nu, &density, ls)?;
    let v = (0..mesh.node_count())
        .map(|i| Ok(-h.values[i] / kinetic.kinetic(nu.vector(i))?))
        .collect::<Result<Vec<_>, FlowError>>()?;
    Ok(InitialData { mesh, nu, v: FEFunction::scalar(v) })
}

pub fn flow_problem(cfg: &RunConfig) -> Result<FlowProblem<f64>> {
    let mut problem = FlowProblem::new(cfg.density_fn()?, cfg.kinetic_fn()?);
    problem.stabilized = cfg.stabilized;
    problem.solver = cfg.solver_config();
    problem.normalize_normals = cfg.normalize_normals;
    Ok(problem)
}

/// Run statistics echoed to `diag.json`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunSummary {
    pub node_count: usize,
    pub element_count: usize,
    pub mesh_width: f64,
    pub steps_requested: usize,
    pub steps_completed: usize,
    pub time_reached: f64,
    /// Failure message when the flow stopped early.
    pub aborted: Option<String>,
    pub initial_energy: f64,
    pub final_energy: f64,
    /// Largest `(E_{n} − E_{n−1})/E_{n−1}` over the run.
    pub max_relative_energy_increase: f64,
    pub min_det_ratio: f64,
    pub max_abs_nu_minus_1: f64,
    pub total_cg_iterations: usize,
    pub wall_seconds: f64,
    pub max_interp_h1: Option<f64>,
    pub max_exact_h1: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutcome {
    pub energy: Vec<EnergyRecord>,
    pub errors: Option<ErrorReport>,
    pub summary: RunSummary,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.summary.aborted.is_none()
    }
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    config: &'a RunConfig,
    summary: &'a RunSummary,
}

/// Compares the numeric state with the reference trajectories.
struct Comparison {
    solution: LevelSetSolution<f64>,
    reference: ReferenceIntegrator<f64>,
    report: ErrorReport,
}

impl Comparison {
    fn record(&mut self, state: &FlowState<f64>) -> Result<()> {
        while self.reference.step < state.step {
            self.reference.advance()?;
        }
        let t = state.time();
        check_times(t, self.reference.time(), state.tau)?;
        let exact_mesh = state.mesh.with_nodes(self.reference.positions.clone())?;
        let row = error_row(&self.solution, &exact_mesh, state.newest(), state.step, t)?;
        self.report.push(row);
        Ok(())
    }
}

fn write_snapshot(dir: &Path, state: &FlowState<f64>, t: f64, format: SnapshotFormat) -> Result<()> {
    let snap = state.newest();
    let (name, text) = match format {
        SnapshotFormat::Vtk => (
            output::snapshot_name(t, "vtk"),
            format_vtk(
                &state.mesh,
                &format!("t = {t}"),
                &[PointData::Vectors("normal", &snap.n), PointData::Scalars("velocity", &snap.v)],
            ),
        ),
        SnapshotFormat::Obj => (output::snapshot_name(t, "obj"), format_obj(&state.mesh.nodes, &display_triangles(&state.mesh))),
    };
    output::write_text(&dir.join(name), &text)
}

fn dump_matrices(dir: &Path, state: &FlowState<f64>, problem: &FlowProblem<f64>) -> Result<()> {
    let nu = state.normal_field();
    let mass = assemble_mass(&state.mesh, &nu, &problem.kinetic)?;
    let stiffness = assemble_stiffness(&state.mesh, &nu, &problem.density, problem.stabilized)?;
    output::write_text(&dir.join("mass.mtx"), &mass.to_matrix_market())?;
    output::write_text(&dir.join("stiffness.mtx"), &stiffness.to_matrix_market())
}

/// Runs the flow described by `cfg`. Flow failures are recorded in the
/// summary rather than returned, so partial logs are still written; only
/// set-up and I/O problems produce an error. With `out_dir` set, the
/// energy log, error log, snapshots and `diag.json` go there.
pub fn simulate(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let started = Instant::now();
    let InitialData { mesh, nu, v } = initial_data(cfg)?;
    let problem = flow_problem(cfg)?;
    if let Some(dir) = out_dir {
        output::create_dir(dir)?;
    }
    let mut comparison = match cfg.solution() {
        Some(solution) => Some(Comparison {
            solution,
            reference: ReferenceIntegrator::new(
                solution,
                mesh.nodes.clone(),
                cfg.tau,
                cfg.reference_order(),
                cfg.reference.clone().unwrap_or_default().start.into(),
            )?,
            report: ErrorReport::default(),
        }),
        None => None,
    };
    let snapshot_steps: Vec<(usize, f64)> = cfg.snapshot_times.iter().map(|&t| (step_count(t, cfg.tau), t)).collect();
    let mut summary = RunSummary {
        node_count: mesh.node_count(),
        element_count: mesh.element_count(),
        mesh_width: mesh.width(),
        steps_requested: step_count(cfg.final_time, cfg.tau),
        min_det_ratio: 1.0,
        ..Default::default()
    };

    let mut state = FlowState::new(mesh, &nu, &v, cfg.tau)?;
    let mut energy: Vec<EnergyRecord> = Vec::new();
    let mut harness_failure: Option<HarnessError> = None;
    let mut observe = |s: &FlowState<f64>| -> Result<()> {
        energy.push(energy_record(s, &problem.density)?);
        summary.total_cg_iterations += if s.step > 0 { s.diagnostics.iterations.iter().sum::<usize>() } else { 0 };
        if let Some(c) = comparison.as_mut() {
            c.record(s)?;
        }
        if let Some(dir) = out_dir {
            for &(_, t) in snapshot_steps.iter().filter(|(k, _)| *k == s.step) {
                write_snapshot(dir, s, t, cfg.snapshot_format)?;
            }
        }
        Ok(())
    };
    let result = run(&mut state, cfg.order, &problem, cfg.final_time, |s| {
        observe(s).map_err(|e| match e {
            HarnessError::Flow(f) => f,
            other => {
                let msg = other.to_string();
                harness_failure = Some(other);
                FlowError::InvalidParameter(msg)
            }
        })
    });
    if let Some(e) = harness_failure {
        return Err(e);
    }
    if let Err(e) = result {
        summary.aborted = Some(e.to_string());
    }

    summary.steps_completed = state.step;
    summary.time_reached = state.time();
    if let (Some(first), Some(last)) = (energy.first(), energy.last()) {
        summary.initial_energy = first.energy;
        summary.final_energy = last.energy;
    }
    summary.max_relative_energy_increase =
        energy.windows(2).map(|w| (w[1].energy - w[0].energy) / w[0].energy.abs()).fold(f64::NEG_INFINITY, f64::max);
    if energy.len() < 2 {
        summary.max_relative_energy_increase = 0.0;
    }
    summary.min_det_ratio = energy.iter().map(|r| r.min_det_ratio).fold(1.0, f64::min);
    summary.max_abs_nu_minus_1 = energy.iter().map(|r| r.max_abs_nu_minus_1).fold(0.0, f64::max);
    let errors = comparison.map(|c| c.report);
    if let Some(r) = &errors {
        summary.max_interp_h1 = Some(r.max_interp_h1);
        summary.max_exact_h1 = Some(r.max_exact_h1);
    }
    summary.wall_seconds = started.elapsed().as_secs_f64();

    if let Some(dir) = out_dir {
        output::write_text(&dir.join("energy.csv"), &output::energy_csv(&energy))?;
        if let Some(r) = &errors {
            output::write_text(&dir.join("errors.csv"), &output::csv(ErrorRow::HEADER, r.rows.iter().map(ErrorRow::csv)))?;
        }
        if cfg.dump_matrices {
            dump_matrices(dir, &state, &problem)?;
        }
        output::write_json(&dir.join("diag.json"), &Diagnostics { config: cfg, summary: &summary })?;
    }
    Ok(RunOutcome { energy, errors, summary })
}

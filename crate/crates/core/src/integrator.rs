//! Linearly implicit BDF time stepping of positions, normals and velocity.

use std::collections::VecDeque;

use crate::anisotropy::{AnisotropyDensity, KineticCoefficient, GUARD_MAX, GUARD_MIN};
use crate::assembly::{nodal_velocity, Assembler};
use crate::coefficients::BdfScheme;
use crate::error::{FlowError, Result};
use crate::geometry::anisotropic_energy;
use crate::linalg::Vec3;
use crate::mesh::{FEFunction, SurfaceMesh};
use crate::solver::{solve_block, SolverConfig};
use crate::Scalar;

/// Abort when an area element shrinks below this fraction of its initial
/// value.
pub const DEGENERATION_RATIO: f64 = 1e-10;

/// Positions `x` and unknowns `u = (n, V)` at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<S> {
    pub x: Vec<Vec3<S>>,
    pub n: Vec<Vec3<S>>,
    pub v: Vec<S>,
}

impl<S: Scalar> Snapshot<S> {
    fn combine(items: &[(&Snapshot<S>, S)]) -> Self {
        let len = items[0].0.x.len();
        let mut out = Snapshot { x: vec![Vec3::zero(); len], n: vec![Vec3::zero(); len], v: vec![S::zero(); len] };
        for (snap, c) in items {
            for i in 0..len {
                out.x[i] += snap.x[i] * *c;
                out.n[i] += snap.n[i] * *c;
                out.v[i] += snap.v[i] * *c;
            }
        }
        out
    }

    /// Column `c` of `u`: normal components for `c < 3`, velocity for `c = 3`.
    pub fn u_column(&self, c: usize) -> Vec<S> {
        if c == 3 {
            self.v.clone()
        } else {
            self.n.iter().map(|n| n[c]).collect()
        }
    }
}

/// Everything that defines the flow apart from the initial surface.
#[derive(Clone, Debug)]
pub struct FlowProblem<S> {
    pub density: AnisotropyDensity<S>,
    pub kinetic: KineticCoefficient<S>,
    /// Use `γ″ + ν_hν_hᵀ` in the stiffness matrix.
    pub stabilized: bool,
    pub solver: SolverConfig,
    /// Renormalise the nodal normals after each solve (off by default).
    pub normalize_normals: bool,
}

impl<S: Scalar> FlowProblem<S> {
    pub fn new(density: AnisotropyDensity<S>, kinetic: KineticCoefficient<S>) -> Self {
        Self { density, kinetic, stabilized: false, solver: SolverConfig::default(), normalize_normals: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub iterations: [usize; 4],
    pub residuals: [f64; 4],
    /// Smallest `√det(JᵀJ)` relative to the initial mesh.
    pub min_det_ratio: f64,
    /// `max_j ||n_j| − 1|`.
    pub max_abs_nu_minus_1: f64,
}

/// Time level, step size and the backward history, newest first.
#[derive(Clone, Debug)]
pub struct FlowState<S> {
    pub step: usize,
    pub tau: S,
    pub history: VecDeque<Snapshot<S>>,
    /// Mesh at the newest positions.
    pub mesh: SurfaceMesh<S>,
    pub diagnostics: StepDiagnostics,
    assembler: Assembler,
    initial_area_elements: Vec<S>,
    capacity: usize,
}

impl<S: Scalar> FlowState<S> {
    /// State at `t = 0` with a single history entry.
    pub fn new(mesh: SurfaceMesh<S>, nu: &FEFunction<S>, v: &FEFunction<S>, tau: S) -> Result<Self> {
        if !(tau > S::zero()) {
            return Err(FlowError::InvalidParameter(format!("step size {tau} must be positive")));
        }
        if nu.components != 3 || nu.node_count() != mesh.node_count() {
            return Err(FlowError::SizeMismatch { expected: 3 * mesh.node_count(), found: nu.values.len() });
        }
        if v.values.len() != mesh.node_count() {
            return Err(FlowError::SizeMismatch { expected: mesh.node_count(), found: v.values.len() });
        }
        let initial_area_elements = mesh.area_elements()?;
        let snapshot = Snapshot { x: mesh.nodes.clone(), n: nu.to_vectors(), v: v.values.clone() };
        let diagnostics = StepDiagnostics { min_det_ratio: 1.0, max_abs_nu_minus_1: max_abs_nu_minus_1(&snapshot.n), ..Default::default() };
        Ok(Self {
            step: 0,
            tau,
            history: VecDeque::from([snapshot]),
            assembler: Assembler::new(&mesh),
            mesh,
            diagnostics,
            initial_area_elements,
            capacity: 1,
        })
    }

    pub fn time(&self) -> S {
        S::from_usize_lossy(self.step) * self.tau
    }

    pub fn newest(&self) -> &Snapshot<S> {
        &self.history[0]
    }

    pub fn normal_field(&self) -> FEFunction<S> {
        FEFunction::from_vectors(&self.newest().n)
    }

    pub fn velocity_field(&self) -> FEFunction<S> {
        FEFunction::scalar(self.newest().v.clone())
    }

    /// Number of back states retained; at least the largest order used.
    pub fn set_capacity(&mut self, capacity: usize) {
        self.capacity = capacity.max(1);
    }
}

fn max_abs_nu_minus_1<S: Scalar>(n: &[Vec3<S>]) -> f64 {
    n.iter().map(|v| (v.norm() - S::one()).abs().as_f64()).fold(0.0, f64::max)
}

/// `x̃ⁿ = Σ_j γ_j x^{n−1−j}` (and likewise for `u`).
pub fn extrapolate<S: Scalar>(state: &FlowState<S>, scheme: &BdfScheme<S>) -> Result<Snapshot<S>> {
    let q = scheme.order;
    if state.history.len() < q {
        return Err(FlowError::IncompleteHistory { available: state.history.len(), required: q });
    }
    if q == 1 {
        return Ok(state.history[0].clone());
    }
    let items: Vec<_> = (0..q).map(|j| (&state.history[j], scheme.gamma[j])).collect();
    Ok(Snapshot::combine(&items))
}

/// One linearly implicit BDF step; errors carry the step index and time.
pub fn step<S: Scalar>(state: &mut FlowState<S>, scheme: &BdfScheme<S>, problem: &FlowProblem<S>) -> Result<()> {
    let n = state.step + 1;
    let time = (S::from_usize_lossy(n) * state.tau).as_f64();
    step_inner(state, scheme, problem).map_err(|e| FlowError::StepFailed { step: n, time, source: Box::new(e) })
}

fn step_inner<S: Scalar>(state: &mut FlowState<S>, scheme: &BdfScheme<S>, problem: &FlowProblem<S>) -> Result<()> {
    let q = scheme.order;
    let tau = state.tau;
    let ext = extrapolate(state, scheme)?;
    let mesh_ext = state.mesh.with_nodes(ext.x.clone())?;
    let nu_ext = FEFunction::from_vectors(&ext.n);
    let v_ext = FEFunction::scalar(ext.v.clone());
    let ops = state.assembler.step_operators(
        &mesh_ext,
        &nu_ext,
        &v_ext,
        &problem.density,
        &problem.kinetic,
        problem.stabilized,
    )?;
    let inv_tau = S::one() / tau;
    let system = ops.mass.linear_combination(scheme.delta[0] * inv_tau, &ops.stiffness, S::one())?;

    let columns: Vec<Vec<S>> = (0..4)
        .map(|c| {
            let mut hist = vec![S::zero(); state.mesh.node_count()];
            for j in 1..=q {
                let u = state.history[j - 1].u_column(c);
                for (h, x) in hist.iter_mut().zip(&u) {
                    *h += scheme.delta[j] * *x;
                }
            }
            let mh = ops.mass.mul_vec(&hist);
            ops.load.columns()[c].iter().zip(&mh).map(|(f, m)| *f - *m * inv_tau).collect()
        })
        .collect();
    let warm: Vec<Vec<S>> = (0..4).map(|c| ext.u_column(c)).collect();
    let reports = solve_block(&system, &columns, &problem.solver, Some(&warm))?;

    let count = state.mesh.node_count();
    let mut normals: Vec<Vec3<S>> =
        (0..count).map(|i| Vec3::new(reports[0].x[i], reports[1].x[i], reports[2].x[i])).collect();
    if problem.normalize_normals {
        for nrm in normals.iter_mut() {
            *nrm = nrm.normalized();
        }
    }
    let velocity = reports[3].x.clone();
    let v_nodal = nodal_velocity(&velocity, &normals)?;

    let inv_d0 = S::one() / scheme.delta[0];
    let mut positions = Vec::with_capacity(count);
    for i in 0..count {
        let mut acc = v_nodal[i] * tau;
        for j in 1..=q {
            acc -= state.history[j - 1].x[i] * scheme.delta[j];
        }
        positions.push(acc * inv_d0);
    }

    for nrm in &normals {
        let len = nrm.norm();
        if !(len >= S::lit(GUARD_MIN) && len <= S::lit(GUARD_MAX)) {
            return Err(FlowError::OutOfGuardRegion { norm: len.as_f64(), element: None });
        }
    }
    let mesh = state.mesh.with_nodes(positions.clone())?;
    let areas = mesh.area_elements()?;
    let nq = mesh.reference.quad_count();
    let mut min_ratio = f64::INFINITY;
    for (k, (a, a0)) in areas.iter().zip(&state.initial_area_elements).enumerate() {
        let ratio = (*a / *a0).as_f64();
        if ratio < DEGENERATION_RATIO {
            return Err(FlowError::MeshDegenerated { element: k / nq, ratio });
        }
        min_ratio = min_ratio.min(ratio);
    }

    state.diagnostics = StepDiagnostics {
        iterations: std::array::from_fn(|c| reports[c].iterations),
        residuals: std::array::from_fn(|c| reports[c].residual),
        min_det_ratio: min_ratio,
        max_abs_nu_minus_1: max_abs_nu_minus_1(&normals),
    };
    state.history.push_front(Snapshot { x: positions, n: normals, v: velocity });
    state.history.truncate(state.capacity.max(q));
    state.mesh = mesh;
    state.step += 1;
    Ok(())
}

/// Fills the history for an order-`q` scheme with steps of orders `1..q−1`.
pub fn bootstrap<S: Scalar>(state: &mut FlowState<S>, q: usize, problem: &FlowProblem<S>) -> Result<()> {
    BdfScheme::<S>::new(q)?;
    state.set_capacity(q);
    while state.history.len() < q {
        let order = state.history.len();
        step(state, &BdfScheme::new(order)?, problem)?;
    }
    Ok(())
}

/// One row of the energy log.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub min_det_ratio: f64,
    pub max_abs_nu_minus_1: f64,
}

pub fn energy_record<S: Scalar>(state: &FlowState<S>, density: &AnisotropyDensity<S>) -> Result<EnergyRecord> {
    Ok(EnergyRecord {
        step: state.step,
        time: state.time().as_f64(),
        energy: anisotropic_energy(&state.mesh, density)?.as_f64(),
        min_det_ratio: state.diagnostics.min_det_ratio,
        max_abs_nu_minus_1: state.diagnostics.max_abs_nu_minus_1,
    })
}

/// Number of steps to reach `t_final`: `⌈T/τ⌉`, ignoring round-off excess.
pub fn step_count(t_final: f64, tau: f64) -> usize {
    let ratio = t_final / tau;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Runs the order-`q` scheme (with bootstrap) to `t_final`, calling
/// `observer` on the initial state and after every accepted step.
pub fn run<S: Scalar>(
    state: &mut FlowState<S>,
    q: usize,
    problem: &FlowProblem<S>,
    t_final: f64,
    mut observer: impl FnMut(&FlowState<S>) -> Result<()>,
) -> Result<()> {
    let scheme = BdfScheme::new(q)?;
    state.set_capacity(q);
    let steps = step_count(t_final, state.tau.as_f64());
    observer(state)?;
    while state.step < steps {
        let order = state.history.len().min(q);
        if order < q {
            step(state, &BdfScheme::new(order)?, problem)?;
        } else {
            step(state, &scheme, problem)?;
        }
        observer(state)?;
    }
    Ok(())
}

//! Self-similarly shrinking ellipsoids: the exact level-set solution and
//! Adams–Bashforth reference trajectories of its nodes.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::anisotropy::{AnisotropyDensity, KineticCoefficient};
use crate::coefficients::AdamsScheme;
use crate::error::{FlowError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::mesh::{FEFunction, QuadricLevelSet, SurfaceMesh};
use crate::Scalar;

/// Distance to the blow-up time below which evaluations are refused.
const BLOWUP_MARGIN: f64 = 1e-12;
/// Largest level-set residual accepted by the checked evaluations.
const ON_SURFACE_TOL: f64 = 1e-8;
/// Largest drift tolerated along reference trajectories.
const DRIFT_LIMIT: f64 = 1e-2;

/// `d(x, t) = x₁² + x₂²/ε² + x₃²/ε² − (1 − 4t)`, valid for `t < ¼`.
///
/// With `γ(w) = √(w·Gw)`, `G = diag(1, ε², ε²)` and `β = 1/γ` the zero set
/// is an exact solution with `H_γ = 2/√(1 − 4t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSetSolution<S> {
    pub eps: S,
}

impl<S: Scalar> LevelSetSolution<S> {
    pub fn new(eps: S) -> Result<Self> {
        if !(eps > S::zero() && eps.is_finite()) {
            return Err(FlowError::InvalidParameter(format!("ellipsoid parameter {eps} must be positive")));
        }
        Ok(Self { eps })
    }

    /// `G* = diag(1, 1/ε², 1/ε²)`.
    pub fn dual_metric(&self) -> Vec3<S> {
        let c = S::one() / (self.eps * self.eps);
        Vec3([S::one(), c, c])
    }

    /// The matched density `γ(w) = √(w·Gw)`.
    pub fn density(&self) -> AnisotropyDensity<S> {
        let e2 = self.eps * self.eps;
        AnisotropyDensity::ellipsoidal(Mat3::diag(Vec3([S::one(), e2, e2])))
    }

    /// The matched kinetic coefficient `β = 1/γ`.
    pub fn kinetic(&self) -> KineticCoefficient<S> {
        KineticCoefficient::InverseGamma(self.density())
    }

    fn check_time(&self, t: S) -> Result<()> {
        if t >= S::lit(0.25 - BLOWUP_MARGIN) {
            Err(FlowError::PastBlowup { time: t.as_f64() })
        } else {
            Ok(())
        }
    }

    pub fn levelset_at(&self, t: S) -> QuadricLevelSet<S> {
        QuadricLevelSet { coefficients: self.dual_metric(), level: S::one() - S::lit(4.0) * t }
    }

    pub fn value(&self, x: Vec3<S>, t: S) -> S {
        let g = self.dual_metric();
        (0..3).map(|i| g[i] * x[i] * x[i]).sum::<S>() - (S::one() - S::lit(4.0) * t)
    }

    pub fn gradient(&self, x: Vec3<S>) -> Vec3<S> {
        let g = self.dual_metric();
        let two = S::lit(2.0);
        Vec3([0, 1, 2].map(|i| two * g[i] * x[i]))
    }

    /// `∂_t d ≡ 4`.
    pub fn time_derivative(&self) -> S {
        S::lit(4.0)
    }

    /// `(ν, V) = (∇d/|∇d|, −∂_t d/|∇d|)` without the on-surface check.
    pub fn normal_and_velocity(&self, x: Vec3<S>) -> (Vec3<S>, S) {
        let g = self.gradient(x);
        let n = g.norm();
        (g * (S::one() / n), -self.time_derivative() / n)
    }

    pub fn exact_normal_and_velocity(&self, x: Vec3<S>, t: S) -> Result<(Vec3<S>, S)> {
        self.check_time(t)?;
        let residual = self.value(x, t).abs();
        if residual > S::lit(ON_SURFACE_TOL) {
            return Err(FlowError::OffSurface { residual: residual.as_f64() });
        }
        Ok(self.normal_and_velocity(x))
    }

    pub fn exact_anisotropic_mean_curvature(&self, t: S) -> Result<S> {
        self.check_time(t)?;
        Ok(S::lit(2.0) / (S::one() - S::lit(4.0) * t).sqrt())
    }

    /// `Ẋ = Vν = −∂_t d ∇d/|∇d|²`; autonomous for this family.
    pub fn velocity(&self, x: Vec3<S>) -> Vec3<S> {
        let g = self.gradient(x);
        g * (-self.time_derivative() / g.norm_squared())
    }

    /// Nodal `ν⁰` and `V⁰` on a mesh whose nodes lie on the initial surface.
    pub fn exact_initial_data(&self, mesh: &SurfaceMesh<S>) -> Result<(FEFunction<S>, FEFunction<S>)> {
        let mut normals = Vec::with_capacity(mesh.node_count());
        let mut velocity = Vec::with_capacity(mesh.node_count());
        for &x in &mesh.nodes {
            let (n, v) = self.exact_normal_and_velocity(x, S::zero())?;
            normals.push(n);
            velocity.push(v);
        }
        Ok((FEFunction::from_vectors(&normals), FEFunction::scalar(velocity)))
    }

    pub fn max_residual(&self, nodes: &[Vec3<S>], t: S) -> S {
        nodes.iter().map(|&x| self.value(x, t).abs()).fold(S::zero(), S::max)
    }
}

/// Radius of the isotropic unit sphere under `V = −H`: `√(1 − 4t)`.
pub fn sphere_radius(t: f64) -> f64 {
    (1.0 - 4.0 * t).sqrt()
}

/// How the first `q − 1` Adams steps are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdamsStart {
    /// Adams–Bashforth steps of orders `1, …, q − 1`.
    LowerOrder,
    /// Classical fourth-order Runge–Kutta steps.
    RungeKutta4,
}

/// Steps all nodal trajectories of the exact flow with an Adams–Bashforth
/// method, one time level at a time.
#[derive(Clone, Debug)]
pub struct ReferenceIntegrator<S> {
    solution: LevelSetSolution<S>,
    scheme: AdamsScheme<S>,
    start: AdamsStart,
    tau: S,
    pub step: usize,
    pub positions: Vec<Vec3<S>>,
    /// Velocities at past levels, newest first.
    rates: VecDeque<Vec<Vec3<S>>>,
}

impl<S: Scalar> ReferenceIntegrator<S> {
    pub fn new(solution: LevelSetSolution<S>, nodes: Vec<Vec3<S>>, tau: S, q: usize, start: AdamsStart) -> Result<Self> {
        let scheme = AdamsScheme::new(q)?;
        let residual = solution.max_residual(&nodes, S::zero());
        if residual > S::lit(ON_SURFACE_TOL) {
            return Err(FlowError::OffSurface { residual: residual.as_f64() });
        }
        let rate = velocities(&solution, &nodes);
        Ok(Self { solution, scheme, start, tau, step: 0, positions: nodes, rates: VecDeque::from([rate]) })
    }

    pub fn time(&self) -> S {
        S::from_usize_lossy(self.step) * self.tau
    }

    pub fn advance(&mut self) -> Result<()> {
        let t_next = S::from_usize_lossy(self.step + 1) * self.tau;
        self.solution.check_time(t_next)?;
        let q = self.scheme.order;
        let available = self.rates.len();
        let tau = self.tau;
        let next: Vec<Vec3<S>> = if available >= q {
            adams_step(&self.positions, &self.rates, &self.scheme.weights, tau)
        } else {
            match self.start {
                AdamsStart::LowerOrder => {
                    let lower = AdamsScheme::<S>::new(available)?;
                    adams_step(&self.positions, &self.rates, &lower.weights, tau)
                }
                AdamsStart::RungeKutta4 => {
                    let sol = self.solution;
                    self.positions.par_iter().map(|&x| rk4(&sol, x, tau)).collect()
                }
            }
        };
        let drift = self.solution.max_residual(&next, t_next);
        if !(drift <= S::lit(DRIFT_LIMIT)) {
            return Err(FlowError::OffSurface { residual: drift.as_f64() });
        }
        self.rates.push_front(velocities(&self.solution, &next));
        self.rates.truncate(q);
        self.positions = next;
        self.step += 1;
        Ok(())
    }
}

fn velocities<S: Scalar>(sol: &LevelSetSolution<S>, nodes: &[Vec3<S>]) -> Vec<Vec3<S>> {
    nodes.par_iter().map(|&x| sol.velocity(x)).collect()
}

fn adams_step<S: Scalar>(x: &[Vec3<S>], rates: &VecDeque<Vec<Vec3<S>>>, weights: &[S], tau: S) -> Vec<Vec3<S>> {
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let mut inc = Vec3::zero();
            for (j, &b) in weights.iter().enumerate() {
                inc += rates[j][i] * b;
            }
            x[i] + inc * tau
        })
        .collect()
}

fn rk4<S: Scalar>(sol: &LevelSetSolution<S>, x: Vec3<S>, tau: S) -> Vec3<S> {
    let half = S::lit(0.5) * tau;
    let k1 = sol.velocity(x);
    let k2 = sol.velocity(x + k1 * half);
    let k3 = sol.velocity(x + k2 * half);
    let k4 = sol.velocity(x + k3 * tau);
    x + (k1 + (k2 + k3) * S::lit(2.0) + k4) * (tau / S::lit(6.0))
}

/// Nodal positions at every time level `0, τ, …` up to `t_final`.
pub fn reference_trajectories<S: Scalar>(
    solution: LevelSetSolution<S>,
    nodes: Vec<Vec3<S>>,
    tau: S,
    q: usize,
    t_final: f64,
    start: AdamsStart,
) -> Result<Vec<Vec<Vec3<S>>>> {
    if t_final >= 0.25 - BLOWUP_MARGIN {
        return Err(FlowError::PastBlowup { time: t_final });
    }
    let steps = crate::integrator::step_count(t_final, tau.as_f64());
    let mut integrator = ReferenceIntegrator::new(solution, nodes, tau, q, start)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(integrator.positions.clone());
    for _ in 0..steps {
        integrator.advance()?;
        out.push(integrator.positions.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_and_velocity_examples() {
        let sol = LevelSetSolution::<f64>::new(0.5).unwrap();
        let (n, v) = sol.exact_normal_and_velocity(Vec3::new(1.0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(n, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(v, -2.0);
        let (n, v) = sol.exact_normal_and_velocity(Vec3::new(0.0, 0.5, 0.0), 0.0).unwrap();
        assert_eq!(n, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(v, -1.0);
        assert!(matches!(sol.exact_normal_and_velocity(Vec3::new(2.0, 0.0, 0.0), 0.0), Err(FlowError::OffSurface { .. })));
    }

    #[test]
    fn curvature_and_blowup() {
        let sol = LevelSetSolution::<f64>::new(0.5).unwrap();
        assert_eq!(sol.exact_anisotropic_mean_curvature(0.0).unwrap(), 2.0);
        assert!((sol.exact_anisotropic_mean_curvature(0.1875).unwrap() - 4.0).abs() < 1e-14);
        assert!(matches!(sol.exact_anisotropic_mean_curvature(0.25), Err(FlowError::PastBlowup { .. })));
    }

    #[test]
    fn sphere_trajectories_are_radial() {
        let sol = LevelSetSolution::new(1.0).unwrap();
        let x0 = Vec3::new(0.0, 0.6, 0.8);
        let traj = reference_trajectories(sol, vec![x0], 1e-3, 2, 0.1, AdamsStart::LowerOrder).unwrap();
        let last = traj.last().unwrap()[0];
        assert!((last - x0 * sphere_radius(0.1)).max_abs() < 1e-5);
    }
}

//! Discrete geometric quantities of finite element fields on a surface mesh.

use rayon::prelude::*;

use crate::anisotropy::{check_guard, AnisotropyDensity};
use crate::assembly::Assembler;
use crate::error::{FlowError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::mesh::{ElementGeometry, FEFunction, LevelSet, SurfaceMesh, MAX_LOCAL};
use crate::solver::{solve_spd, SolverConfig};
use crate::Scalar;

/// Values of `ν_h`, `V_h` and their tangential gradients at one quadrature
/// point.
#[derive(Clone, Copy, Debug)]
pub struct GeometricSample<S> {
    pub element: usize,
    pub qp: usize,
    pub geometry: ElementGeometry<S>,
    pub nu: Vec3<S>,
    /// `grad_nu[a][ℓ] = (∇_Γ)_a ν_ℓ`.
    pub grad_nu: Mat3<S>,
    pub v: S,
    pub grad_v: Vec3<S>,
}

impl<S: Scalar> GeometricSample<S> {
    /// `A_h = ½(∇_Γν_h + (∇_Γν_h)ᵀ)`.
    pub fn weingarten(&self) -> Mat3<S> {
        self.grad_nu.symmetric_part()
    }
}

/// Nodal normals: `∇d/|∇d|` when a level set is given, otherwise normalised
/// averages of the adjacent elements' parametric normals at the node.
pub fn interpolated_normal_field<S: Scalar>(
    mesh: &SurfaceMesh<S>,
    levelset: Option<&dyn LevelSet<S>>,
) -> Result<FEFunction<S>> {
    if let Some(ls) = levelset {
        let normals: Vec<_> = mesh
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let g = ls.gradient(x);
                let n = g.norm();
                if n > S::zero() {
                    Ok(g * (S::one() / n))
                } else {
                    Err(FlowError::ZeroNormal { node: i })
                }
            })
            .collect::<Result<_>>()?;
        return Ok(FEFunction::from_vectors(&normals));
    }
    // parametric normals evaluated at each element's copy of the node,
    // weighted by the local area element
    let tabulated: Vec<_> = mesh.reference.nodes().iter().map(|p| mesh.reference.evaluate(p[0], p[1]).1).collect();
    let mut sums = vec![Vec3::zero(); mesh.node_count()];
    for e in 0..mesh.element_count() {
        let el = mesh.element(e);
        for (i, ref_grads) in tabulated.iter().enumerate() {
            let mut x_xi = Vec3::zero();
            let mut x_eta = Vec3::zero();
            for (j, &node) in el.iter().enumerate() {
                x_xi += mesh.nodes[node] * ref_grads[j][0];
                x_eta += mesh.nodes[node] * ref_grads[j][1];
            }
            sums[el[i]] += x_xi.cross(x_eta);
        }
    }
    let normals = sums
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let n = s.norm();
            if n < S::lit(1e-8) {
                Err(FlowError::ZeroNormal { node: i })
            } else {
                Ok(s * (S::one() / n))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FEFunction::from_vectors(&normals))
}

/// Samples of `ν_h` and `V_h` at every quadrature point of element `e`.
pub fn sample_element<S: Scalar>(
    mesh: &SurfaceMesh<S>,
    nu: &FEFunction<S>,
    v: &FEFunction<S>,
    e: usize,
) -> Result<Vec<GeometricSample<S>>> {
    let el = mesh.element(e);
    let mut local_nu = [Vec3::zero(); MAX_LOCAL];
    let mut local_v = [S::zero(); MAX_LOCAL];
    for (i, &node) in el.iter().enumerate() {
        local_nu[i] = nu.vector(node);
        local_v[i] = v.values[node];
    }
    let values = &mesh.reference.values;
    (0..mesh.reference.quad_count())
        .map(|q| {
            let geometry = mesh.element_geometry(e, q)?;
            let mut nu_q = Vec3::zero();
            let mut v_q = S::zero();
            let mut grad_nu = Mat3::zero();
            let mut grad_v = Vec3::zero();
            for i in 0..el.len() {
                let phi = values[q][i];
                nu_q += local_nu[i] * phi;
                v_q += local_v[i] * phi;
                grad_nu = grad_nu + geometry.grads[i].outer(local_nu[i]);
                grad_v += geometry.grads[i] * local_v[i];
            }
            Ok(GeometricSample { element: e, qp: q, geometry, nu: nu_q, grad_nu, v: v_q, grad_v })
        })
        .collect()
}

pub fn sample_fields<S: Scalar>(
    mesh: &SurfaceMesh<S>,
    nu: &FEFunction<S>,
    v: &FEFunction<S>,
    e: usize,
    qp: usize,
) -> Result<GeometricSample<S>> {
    if nu.node_count() != mesh.node_count() || nu.components != 3 {
        return Err(FlowError::SizeMismatch { expected: 3 * mesh.node_count(), found: nu.values.len() });
    }
    if v.values.len() != mesh.node_count() {
        return Err(FlowError::SizeMismatch { expected: mesh.node_count(), found: v.values.len() });
    }
    sample_element(mesh, nu, v, e)?
        .into_iter()
        .nth(qp)
        .ok_or(FlowError::SizeMismatch { expected: mesh.reference.quad_count(), found: qp + 1 })
}

/// `|A_h|²_{γ″} = A_h : γ″(ν_h) A_h` with the unstabilised Hessian.
pub fn weingarten_energy_density<S: Scalar>(sample: &GeometricSample<S>, density: &AnisotropyDensity<S>) -> Result<S> {
    check_guard(sample.nu).map_err(|e| e.on_element(sample.element))?;
    let hess = density.hessian(sample.nu, false)?;
    Ok(weingarten_contraction(&sample.weingarten(), &hess))
}

pub(crate) fn weingarten_contraction<S: Scalar>(a: &Mat3<S>, hess: &Mat3<S>) -> S {
    a.contract(&hess.mul_mat(a))
}

/// `H_γ = tr(γ″(∇d) D²d)` at a point of a level set, the divergence of the
/// extended Cahn–Hoffman field `γ′(∇d)`.
pub fn analytic_anisotropic_mean_curvature<S: Scalar>(
    levelset: &dyn LevelSet<S>,
    density: &AnisotropyDensity<S>,
    x: Vec3<S>,
) -> Result<S> {
    let grad = levelset.gradient(x);
    let hess = density.hessian(grad, false)?;
    Ok(hess.contract(&levelset.hessian(x)))
}

/// Nodal `H_γ`: the interpolant of the analytic value when a level set is
/// given, otherwise the L²-projection of the elementwise surface divergence
/// of `Ĩ_h γ′(ν_h)`.
pub fn discrete_anisotropic_mean_curvature<S: Scalar>(
    mesh: &SurfaceMesh<S>,
    nu: &FEFunction<S>,
    density: &AnisotropyDensity<S>,
    levelset: Option<&dyn LevelSet<S>>,
) -> Result<FEFunction<S>> {
    if let Some(ls) = levelset {
        let values = mesh
            .nodes
            .iter()
            .map(|&x| analytic_anisotropic_mean_curvature(ls, density, x))
            .collect::<Result<Vec<_>>>()?;
        return Ok(FEFunction::scalar(values));
    }
    let cahn_hoffman = (0..mesh.node_count())
        .map(|i| {
            let n = nu.vector(i);
            check_guard(n)?;
            density.gradient(n)
        })
        .collect::<Result<Vec<_>>>()?;
    let locals = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            let mut local = [S::zero(); MAX_LOCAL];
            for q in 0..mesh.reference.quad_count() {
                let g = mesh.element_geometry(e, q)?;
                let mut div = S::zero();
                for (i, &node) in el.iter().enumerate() {
                    div += g.grads[i].dot(cahn_hoffman[node]);
                }
                for i in 0..el.len() {
                    local[i] += g.weight * div * mesh.reference.values[q][i];
                }
            }
            Ok(local)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut load = vec![S::zero(); mesh.node_count()];
    for (e, local) in locals.iter().enumerate() {
        for (i, &node) in mesh.element(e).iter().enumerate() {
            load[node] += local[i];
        }
    }
    let mass = Assembler::new(mesh).plain_mass(mesh)?;
    let report = solve_spd(&mass, &load, &SolverConfig::default(), None)?;
    Ok(FEFunction::scalar(report.x))
}

/// `E_γ(Γ_h) = ∫ γ(ν_{Γ_h})` with the geometric element normal.
pub fn anisotropic_energy<S: Scalar>(mesh: &SurfaceMesh<S>, density: &AnisotropyDensity<S>) -> Result<S> {
    let parts = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| {
            let mut local = S::zero();
            for g in mesh.element_geometries(e)? {
                local += g.weight * density.evaluate(g.normal)?;
            }
            Ok(local)
        })
        .collect::<Result<Vec<S>>>()?;
    Ok(parts.into_iter().sum())
}

//! Solution-dependent mass and stiffness matrices and load vectors.
//!
//! Element contributions are computed in parallel and scattered serially in
//! element order, so assembled values are bit-for-bit reproducible.

use std::sync::Arc;

use rayon::prelude::*;

use crate::anisotropy::{check_guard, AnisotropyDensity, KineticCoefficient};
use crate::error::{FlowError, Result};
use crate::geometry::{sample_element, weingarten_contraction};
use crate::linalg::{Mat3, Vec3};
use crate::mesh::{FEFunction, SurfaceMesh, MAX_LOCAL};
use crate::sparse::{SparseMatrix, SparsityPattern};
use crate::Scalar;

const LOCAL2: usize = MAX_LOCAL * MAX_LOCAL;

/// Load vectors: `f1` per normal component and `f2` for the velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadVectors<S> {
    pub f1: [Vec<S>; 3],
    pub f2: Vec<S>,
}

impl<S: Scalar> LoadVectors<S> {
    /// The four right-hand-side columns `(f1_x, f1_y, f1_z, f2)`.
    pub fn columns(&self) -> [&[S]; 4] {
        [&self.f1[0], &self.f1[1], &self.f1[2], &self.f2]
    }
}

/// Mass, stiffness and load of one time step, from a single sampling pass.
#[derive(Clone, Debug)]
pub struct StepOperators<S> {
    pub mass: SparseMatrix<S>,
    pub stiffness: SparseMatrix<S>,
    pub load: LoadVectors<S>,
}

/// Sparsity pattern of a mesh connectivity, reused across time steps.
#[derive(Clone, Debug)]
pub struct Assembler {
    pub pattern: Arc<SparsityPattern>,
}

#[derive(Clone, Copy)]
struct Want {
    mass: bool,
    stiffness: bool,
    load: bool,
}

struct Local<S> {
    mass: [S; LOCAL2],
    stiffness: [S; LOCAL2],
    load: [[S; MAX_LOCAL]; 4],
}

impl Assembler {
    pub fn new<S: Scalar>(mesh: &SurfaceMesh<S>) -> Self {
        let stride = mesh.reference.local_count();
        Self { pattern: Arc::new(SparsityPattern::from_elements(mesh.node_count(), mesh.elements_flat(), stride)) }
    }

    fn check<S: Scalar>(&self, mesh: &SurfaceMesh<S>) -> Result<()> {
        if self.pattern.n != mesh.node_count() || self.pattern.stride != mesh.reference.local_count() {
            return Err(FlowError::SizeMismatch { expected: self.pattern.n, found: mesh.node_count() });
        }
        Ok(())
    }

    fn scatter<S: Scalar>(&self, locals: &[[S; LOCAL2]], stride: usize) -> SparseMatrix<S> {
        let mut m = SparseMatrix::zeros(self.pattern.clone());
        let mut buf = vec![S::zero(); stride * stride];
        for (e, local) in locals.iter().enumerate() {
            for i in 0..stride {
                for j in 0..stride {
                    buf[i * stride + j] = local[i * MAX_LOCAL + j];
                }
            }
            m.scatter_local(e, &buf);
        }
        m
    }

    /// `∫ φ_i φ_j` on the mesh.
    pub fn plain_mass<S: Scalar>(&self, mesh: &SurfaceMesh<S>) -> Result<SparseMatrix<S>> {
        self.plain_form(mesh, true)
    }

    /// `∫ ∇_Γφ_i · ∇_Γφ_j` on the mesh.
    pub fn plain_stiffness<S: Scalar>(&self, mesh: &SurfaceMesh<S>) -> Result<SparseMatrix<S>> {
        self.plain_form(mesh, false)
    }

    fn plain_form<S: Scalar>(&self, mesh: &SurfaceMesh<S>, mass: bool) -> Result<SparseMatrix<S>> {
        self.check(mesh)?;
        let n_local = mesh.reference.local_count();
        let locals = (0..mesh.element_count())
            .into_par_iter()
            .map(|e| {
                let mut local = [S::zero(); LOCAL2];
                for q in 0..mesh.reference.quad_count() {
                    let g = mesh.element_geometry(e, q)?;
                    let phi = &mesh.reference.values[q];
                    for i in 0..n_local {
                        for j in 0..n_local {
                            let v = if mass { phi[i] * phi[j] } else { g.grads[i].dot(g.grads[j]) };
                            local[i * MAX_LOCAL + j] += g.weight * v;
                        }
                    }
                }
                Ok(local)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.scatter(&locals, n_local))
    }

    /// `∫ K(ν_h) ∇_Γφ_j · ∇_Γφ_i` for a user matrix field `K`, guarded on
    /// `|ν_h| ∈ [½, 2]`.
    pub fn weighted_stiffness<S: Scalar>(
        &self,
        mesh: &SurfaceMesh<S>,
        nu: &FEFunction<S>,
        kernel: impl Fn(Vec3<S>) -> Result<Mat3<S>> + Sync,
    ) -> Result<SparseMatrix<S>> {
        self.check(mesh)?;
        let n_local = mesh.reference.local_count();
        let zero_v = FEFunction::zeros(mesh.node_count(), 1);
        let locals = (0..mesh.element_count())
            .into_par_iter()
            .map(|e| {
                let mut local = [S::zero(); LOCAL2];
                for s in sample_element(mesh, nu, &zero_v, e)? {
                    check_guard(s.nu).map_err(|err| err.on_element(e))?;
                    let k = kernel(s.nu)?;
                    add_stiffness(&mut local, &k, &s.geometry.grads, s.geometry.weight, n_local);
                }
                Ok(local)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.scatter(&locals, n_local))
    }

    fn pass<S: Scalar>(
        &self,
        mesh: &SurfaceMesh<S>,
        nu: &FEFunction<S>,
        v: &FEFunction<S>,
        density: &AnisotropyDensity<S>,
        kinetic: &KineticCoefficient<S>,
        stabilized: bool,
        want: Want,
    ) -> Result<(Option<SparseMatrix<S>>, Option<SparseMatrix<S>>, Option<LoadVectors<S>>)> {
        self.check(mesh)?;
        if nu.components != 3 || nu.node_count() != mesh.node_count() {
            return Err(FlowError::SizeMismatch { expected: 3 * mesh.node_count(), found: nu.values.len() });
        }
        if v.values.len() != mesh.node_count() {
            return Err(FlowError::SizeMismatch { expected: mesh.node_count(), found: v.values.len() });
        }
        let n_local = mesh.reference.local_count();
        let locals = (0..mesh.element_count())
            .into_par_iter()
            .map(|e| {
                let mut local = Local {
                    mass: [S::zero(); LOCAL2],
                    stiffness: [S::zero(); LOCAL2],
                    load: [[S::zero(); MAX_LOCAL]; 4],
                };
                for s in sample_element(mesh, nu, v, e)? {
                    check_guard(s.nu).map_err(|err| err.on_element(e))?;
                    let w = s.geometry.weight;
                    let phi = &mesh.reference.values[s.qp];
                    if want.mass || want.load {
                        let (beta, beta_grad) = kinetic.evaluate(s.nu).map_err(|err| err.on_element(e))?;
                        if want.mass {
                            for i in 0..n_local {
                                for j in 0..n_local {
                                    local.mass[i * MAX_LOCAL + j] += w * beta * phi[i] * phi[j];
                                }
                            }
                        }
                        if want.load {
                            let hess = density.hessian(s.nu, false)?;
                            let a2 = weingarten_contraction(&s.weingarten(), &hess);
                            // ∇_Γν_h β′(ν_h) = ∇_Γ(β(ν_h))
                            let grad_beta = s.grad_nu.mul_vec(beta_grad);
                            let f1 = s.nu * a2 + grad_beta * s.v;
                            let f2 = a2 * s.v + s.v * s.grad_v.dot(beta_grad);
                            for i in 0..n_local {
                                let wp = w * phi[i];
                                for c in 0..3 {
                                    local.load[c][i] += wp * f1[c];
                                }
                                local.load[3][i] += wp * f2;
                            }
                        }
                    }
                    if want.stiffness {
                        let hess = density.hessian(s.nu, stabilized)?;
                        add_stiffness(&mut local.stiffness, &hess, &s.geometry.grads, w, n_local);
                    }
                }
                Ok(local)
            })
            .collect::<Result<Vec<_>>>()?;

        let mass = want.mass.then(|| {
            let m: Vec<_> = locals.iter().map(|l| l.mass).collect();
            self.scatter(&m, n_local)
        });
        let stiffness = want.stiffness.then(|| {
            let a: Vec<_> = locals.iter().map(|l| l.stiffness).collect();
            self.scatter(&a, n_local)
        });
        let load = want.load.then(|| {
            let n = mesh.node_count();
            let mut cols: [Vec<S>; 4] = std::array::from_fn(|_| vec![S::zero(); n]);
            for (e, l) in locals.iter().enumerate() {
                for (i, &node) in mesh.element(e).iter().enumerate() {
                    for c in 0..4 {
                        cols[c][node] += l.load[c][i];
                    }
                }
            }
            let [a, b, c, d] = cols;
            LoadVectors { f1: [a, b, c], f2: d }
        });
        Ok((mass, stiffness, load))
    }

    /// `M_ij = ∫ β(ν_h) φ_i φ_j`.
    pub fn mass<S: Scalar>(
        &self,
        mesh: &SurfaceMesh<S>,
        nu: &FEFunction<S>,
        kinetic: &KineticCoefficient<S>,
    ) -> Result<SparseMatrix<S>> {
        let v = FEFunction::zeros(mesh.node_count(), 1);
        let want = Want { mass: true, stiffness: false, load: false };
        let density = AnisotropyDensity::isotropic();
        Ok(self.pass(mesh, nu, &v, &density, kinetic, false, want)?.0.expect("requested"))
    }

    /// `A_ij = ∫ γ″(ν_h) ∇_Γφ_j · ∇_Γφ_i`, with `γ″ + ν_hν_hᵀ` when stabilised.
    pub fn stiffness<S: Scalar>(
        &self,
        mesh: &SurfaceMesh<S>,
        nu: &FEFunction<S>,
        density: &AnisotropyDensity<S>,
        stabilized: bool,
    ) -> Result<SparseMatrix<S>> {
        let v = FEFunction::zeros(mesh.node_count(), 1);
        let want = Want { mass: false, stiffness: true, load: false };
        Ok(self.pass(mesh, nu, &v, density, &KineticCoefficient::ConstantOne, stabilized, want)?.1.expect("requested"))
    }

    pub fn rhs<S: Scalar>(
        &self,
        mesh: &SurfaceMesh<S>,
        nu: &FEFunction<S>,
        v: &FEFunction<S>,
        density: &AnisotropyDensity<S>,
        kinetic: &KineticCoefficient<S>,
    ) -> Result<LoadVectors<S>> {
        let want = Want { mass: false, stiffness: false, load: true };
        Ok(self.pass(mesh, nu, v, density, kinetic, false, want)?.2.expect("requested"))
    }

    pub fn step_operators<S: Scalar>(
        &self,
        mesh: &SurfaceMesh<S>,
        nu: &FEFunction<S>,
        v: &FEFunction<S>,
        density: &AnisotropyDensity<S>,
        kinetic: &KineticCoefficient<S>,
        stabilized: bool,
    ) -> Result<StepOperators<S>> {
        let want = Want { mass: true, stiffness: true, load: true };
        let (m, a, f) = self.pass(mesh, nu, v, density, kinetic, stabilized, want)?;
        Ok(StepOperators { mass: m.expect("requested"), stiffness: a.expect("requested"), load: f.expect("requested") })
    }
}

fn add_stiffness<S: Scalar>(local: &mut [S; LOCAL2], k: &Mat3<S>, grads: &[Vec3<S>; MAX_LOCAL], w: S, n_local: usize) {
    let mut kg = [Vec3::zero(); MAX_LOCAL];
    for j in 0..n_local {
        kg[j] = k.mul_vec(grads[j]);
    }
    for i in 0..n_local {
        for j in 0..n_local {
            local[i * MAX_LOCAL + j] += w * grads[i].dot(kg[j]);
        }
    }
}

pub fn assemble_mass<S: Scalar>(mesh: &SurfaceMesh<S>, nu: &FEFunction<S>, kinetic: &KineticCoefficient<S>) -> Result<SparseMatrix<S>> {
    Assembler::new(mesh).mass(mesh, nu, kinetic)
}

pub fn assemble_stiffness<S: Scalar>(
    mesh: &SurfaceMesh<S>,
    nu: &FEFunction<S>,
    density: &AnisotropyDensity<S>,
    stabilized: bool,
) -> Result<SparseMatrix<S>> {
    Assembler::new(mesh).stiffness(mesh, nu, density, stabilized)
}

pub fn assemble_rhs<S: Scalar>(
    mesh: &SurfaceMesh<S>,
    nu: &FEFunction<S>,
    v: &FEFunction<S>,
    density: &AnisotropyDensity<S>,
    kinetic: &KineticCoefficient<S>,
) -> Result<LoadVectors<S>> {
    Assembler::new(mesh).rhs(mesh, nu, v, density, kinetic)
}

pub fn assemble_plain_mass<S: Scalar>(mesh: &SurfaceMesh<S>) -> Result<SparseMatrix<S>> {
    Assembler::new(mesh).plain_mass(mesh)
}

/// Laplace–Beltrami stiffness, used for the `H¹` seminorm.
pub fn h1_stiffness<S: Scalar>(mesh: &SurfaceMesh<S>) -> Result<SparseMatrix<S>> {
    Assembler::new(mesh).plain_stiffness(mesh)
}

/// `v_j = V_j n_j` node by node.
pub fn nodal_velocity<S: Scalar>(v: &[S], n: &[Vec3<S>]) -> Result<Vec<Vec3<S>>> {
    if v.len() != n.len() {
        return Err(FlowError::SizeMismatch { expected: n.len(), found: v.len() });
    }
    Ok(v.iter().zip(n).map(|(&vj, &nj)| nj * vj).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ReferenceElement;

    fn flat_pillow() -> SurfaceMesh<f64> {
        let nodes = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let r = Arc::new(ReferenceElement::with_default_quadrature(1).unwrap());
        SurfaceMesh::new(nodes, vec![0, 1, 2, 0, 2, 1], r).unwrap()
    }

    #[test]
    fn affine_mass_block() {
        let mesh = flat_pillow();
        let m = assemble_plain_mass(&mesh).unwrap();
        // two copies of a triangle of area 1 stacked on each other
        let t = 1.0 / 12.0 * 2.0;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 * t } else { t };
                assert!((m.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nodal_velocity_examples() {
        let n = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.6, 0.8)];
        let v = nodal_velocity(&[-2.0, -2.0], &n).unwrap();
        assert_eq!(v[1], Vec3::new(0.0, -1.2, -1.6));
        assert!(nodal_velocity(&[1.0], &n).is_err());
        let doubled = nodal_velocity(&[-4.0, -4.0], &n).unwrap();
        assert_eq!(doubled[1], v[1] * 2.0);
    }
}

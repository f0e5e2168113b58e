use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::mesh::reference::ReferenceElement;
use crate::mesh::surface::SurfaceMesh;
use crate::Scalar;

const MAX_NEWTON: usize = 50;

/// Scalar field whose zero set is the surface of interest.
pub trait LevelSet<S>: Send + Sync {
    fn value(&self, x: Vec3<S>) -> S;
    fn gradient(&self, x: Vec3<S>) -> Vec3<S>;
    fn hessian(&self, x: Vec3<S>) -> Mat3<S>;
}

/// `d(x) = Σ c_i x_i² − level`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadricLevelSet<S> {
    pub coefficients: Vec3<S>,
    pub level: S,
}

impl<S: Scalar> QuadricLevelSet<S> {
    pub fn sphere(radius: S) -> Self {
        Self { coefficients: Vec3([S::one(); 3]), level: radius * radius }
    }

    /// `x₁² + x₂²/ε² + x₃²/ε² − 1`.
    pub fn ellipsoid(eps: S) -> Self {
        let c = S::one() / (eps * eps);
        Self { coefficients: Vec3([S::one(), c, c]), level: S::one() }
    }
}

impl<S: Scalar> LevelSet<S> for QuadricLevelSet<S> {
    fn value(&self, x: Vec3<S>) -> S {
        (0..3).map(|i| self.coefficients[i] * x[i] * x[i]).sum::<S>() - self.level
    }

    fn gradient(&self, x: Vec3<S>) -> Vec3<S> {
        let two = S::lit(2.0);
        Vec3([0, 1, 2].map(|i| two * self.coefficients[i] * x[i]))
    }

    fn hessian(&self, _x: Vec3<S>) -> Mat3<S> {
        Mat3::diag(self.coefficients * S::lit(2.0))
    }
}

/// Twelve vertices and twenty outward faces of the unit icosahedron.
pub fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let norm = (1.0 + t * t).sqrt();
    let vertices = raw.iter().map(|p| p.map(|c| c / norm)).collect();
    let faces = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    (vertices, faces)
}

/// Unit icosphere refined `refinement` times (`20·4^r` triangles).
pub fn icosphere(refinement: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let (mut vertices, mut faces) = icosahedron();
    for _ in 0..refinement {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                let m = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                let r = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
                vertices.push(m.map(|c| c / r));
                vertices.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Moves `x` along the ray from the origin onto `{d = 0}` by Newton's method.
pub fn project_radially<S: Scalar>(levelset: &dyn LevelSet<S>, x: Vec3<S>, node: usize) -> Result<Vec3<S>> {
    let dir = x.normalized();
    let mut s = x.norm();
    let tol = S::lit(1e-12).max(S::epsilon() * S::lit(64.0));
    let mut residual = levelset.value(dir * s);
    for _ in 0..MAX_NEWTON {
        if residual.abs() <= tol {
            return Ok(dir * s);
        }
        let slope = levelset.gradient(dir * s).dot(dir);
        if !(slope > S::zero()) {
            return Err(FlowError::NotStarShaped { node });
        }
        let mut step = residual / slope;
        // keep the iterate on the positive ray
        while s - step <= S::zero() {
            step *= S::lit(0.5);
        }
        s -= step;
        residual = levelset.value(dir * s);
    }
    if residual.abs() <= tol {
        Ok(dir * s)
    } else {
        Err(FlowError::ProjectionDiverged { node, residual: residual.abs().as_f64() })
    }
}

/// Icosphere-based mesh of a star-shaped level set.
///
/// Vertices are projected radially; for `k = 2` the mid-edge nodes are the
/// straight midpoints of the projected vertices, projected radially as well.
pub fn generate_levelset_mesh<S: Scalar>(
    levelset: &dyn LevelSet<S>,
    refinement: usize,
    reference: Arc<ReferenceElement<S>>,
) -> Result<SurfaceMesh<S>> {
    let (vertices, faces) = icosphere(refinement);
    let mut nodes = vertices
        .iter()
        .enumerate()
        .map(|(i, &p)| project_radially(levelset, Vec3::from_f64(p), i))
        .collect::<Result<Vec<_>>>()?;
    let mut elements = Vec::with_capacity(faces.len() * reference.local_count());
    if reference.degree == 1 {
        elements.extend(faces.iter().flatten());
    } else {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &faces {
            let mut mids = [0; 3];
            for (m, (p, q)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
                let key = (p.min(q), p.max(q));
                mids[m] = match midpoints.get(&key) {
                    Some(&i) => i,
                    None => {
                        let i = nodes.len();
                        let straight = (nodes[p] + nodes[q]) * S::lit(0.5);
                        nodes.push(project_radially(levelset, straight, i)?);
                        midpoints.insert(key, i);
                        i
                    }
                };
            }
            elements.extend([a, b, c, mids[0], mids[1], mids[2]]);
        }
    }
    let mesh = SurfaceMesh::new(nodes, elements, reference)?;
    if mesh.signed_volume() < S::zero() {
        return Ok(flip_orientation(&mesh));
    }
    Ok(mesh)
}

/// Quadratic mesh with straight mid-edge nodes over a linear one; the
/// geometry is unchanged.
pub fn elevate_to_quadratic<S: Scalar>(mesh: &SurfaceMesh<S>, reference: Arc<ReferenceElement<S>>) -> Result<SurfaceMesh<S>> {
    if mesh.degree() != 1 || reference.degree != 2 {
        return Err(FlowError::UnsupportedDegree(reference.degree));
    }
    let mut nodes = mesh.nodes.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut elements = Vec::with_capacity(6 * mesh.element_count());
    for e in 0..mesh.element_count() {
        let &[a, b, c] = mesh.element(e) else { unreachable!("linear elements have three nodes") };
        let mut mids = [0; 3];
        for (m, (p, q)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
            mids[m] = *midpoints.entry((p.min(q), p.max(q))).or_insert_with(|| {
                nodes.push((mesh.nodes[p] + mesh.nodes[q]) * S::lit(0.5));
                nodes.len() - 1
            });
        }
        elements.extend([a, b, c, mids[0], mids[1], mids[2]]);
    }
    SurfaceMesh::new(nodes, elements, reference)
}

/// Reverses every element's orientation.
pub fn flip_orientation<S: Scalar>(mesh: &SurfaceMesh<S>) -> SurfaceMesh<S> {
    let stride = mesh.reference.local_count();
    let mut elements = mesh.elements_flat().to_vec();
    for el in elements.chunks_mut(stride) {
        el.swap(1, 2);
        if stride == 6 {
            // midpoints of 0–1 and 2–0 trade places, 1–2 stays
            el.swap(3, 5);
        }
    }
    SurfaceMesh::new(mesh.nodes.clone(), elements, mesh.reference.clone()).expect("flipping keeps the mesh closed")
}

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::linalg::Vec3;
use crate::mesh::reference::{ReferenceElement, MAX_LOCAL};
use crate::Scalar;

/// Closed, consistently oriented surface triangulation of degree 1 or 2.
///
/// Elements are stored flat with stride `reference.local_count()`; the node
/// order inside an element follows [`ReferenceElement`].
#[derive(Clone, Debug)]
pub struct SurfaceMesh<S> {
    pub nodes: Vec<Vec3<S>>,
    elements: Vec<usize>,
    pub reference: Arc<ReferenceElement<S>>,
    width: S,
}

/// Geometry of one element at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry<S> {
    pub position: Vec3<S>,
    /// `√det(JᵀJ)`, the area element.
    pub sqrt_det: S,
    /// Quadrature weight times `sqrt_det`.
    pub weight: S,
    /// Geometric unit normal `x_ξ × x_η / |x_ξ × x_η|`.
    pub normal: Vec3<S>,
    /// Tangential gradients `∇_Γφ_i` of the local basis functions.
    pub grads: [Vec3<S>; MAX_LOCAL],
    pub n_local: usize,
}

impl<S: Scalar> ElementGeometry<S> {
    /// `∇_Γ u` of the field with local nodal values `u`.
    pub fn gradient_of(&self, local: &[S]) -> Vec3<S> {
        let mut g = Vec3::zero();
        for i in 0..self.n_local {
            g += self.grads[i] * local[i];
        }
        g
    }
}

impl<S: Scalar> SurfaceMesh<S> {
    /// Builds a mesh and checks that it is closed and consistently oriented.
    pub fn new(nodes: Vec<Vec3<S>>, elements: Vec<usize>, reference: Arc<ReferenceElement<S>>) -> Result<Self> {
        let stride = reference.local_count();
        if elements.len() % stride != 0 {
            return Err(FlowError::SizeMismatch { expected: elements.len().div_ceil(stride) * stride, found: elements.len() });
        }
        if let Some(&bad) = elements.iter().find(|&&i| i >= nodes.len()) {
            return Err(FlowError::SizeMismatch { expected: nodes.len(), found: bad + 1 });
        }
        let mut mesh = Self { nodes, elements, reference, width: S::zero() };
        mesh.check_closed()?;
        mesh.width = mesh.compute_width();
        Ok(mesh)
    }

    /// Same connectivity and reference element, new node positions.
    pub fn with_nodes(&self, nodes: Vec<Vec3<S>>) -> Result<Self> {
        if nodes.len() != self.nodes.len() {
            return Err(FlowError::SizeMismatch { expected: self.nodes.len(), found: nodes.len() });
        }
        let mut mesh = Self { nodes, elements: self.elements.clone(), reference: self.reference.clone(), width: S::zero() };
        mesh.width = mesh.compute_width();
        Ok(mesh)
    }

    pub fn degree(&self) -> usize {
        self.reference.degree
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len() / self.reference.local_count()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let s = self.reference.local_count();
        &self.elements[e * s..(e + 1) * s]
    }

    pub fn elements_flat(&self) -> &[usize] {
        &self.elements
    }

    /// Mesh width: largest vertex-to-vertex distance over all elements.
    pub fn width(&self) -> S {
        self.width
    }

    fn compute_width(&self) -> S {
        (0..self.element_count())
            .map(|e| {
                let el = self.element(e);
                let [a, b, c] = [el[0], el[1], el[2]].map(|i| self.nodes[i]);
                (a - b).norm().max((b - c).norm()).max((c - a).norm())
            })
            .fold(S::zero(), S::max)
    }

    /// Vertex triangles (the first three local nodes of each element).
    pub fn vertex_triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (0..self.element_count()).map(|e| {
            let el = self.element(e);
            [el[0], el[1], el[2]]
        })
    }

    /// Every edge must be traversed once in each direction.
    pub fn check_closed(&self) -> Result<()> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for t in self.vertex_triangles() {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        let mut bad: Vec<(usize, usize)> = directed
            .iter()
            .filter(|(&(a, b), &count)| count != 1 || directed.get(&(b, a)) != Some(&1))
            .map(|(&(a, b), _)| (a.min(b), a.max(b)))
            .collect();
        bad.sort_unstable();
        match bad.first() {
            Some(&(a, b)) => Err(FlowError::NotClosed(a, b)),
            None => Ok(()),
        }
    }

    /// `V − E + F` of the vertex triangulation.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        let mut verts = std::collections::HashSet::new();
        for t in self.vertex_triangles() {
            verts.extend(t);
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        verts.len() as i64 - edges.len() as i64 + self.element_count() as i64
    }

    /// Geometry at quadrature point `q` of element `e`.
    pub fn element_geometry(&self, e: usize, q: usize) -> Result<ElementGeometry<S>> {
        let r = &self.reference;
        let el = self.element(e);
        let n_local = el.len();
        let values = &r.values[q];
        let ref_grads = &r.gradients[q];
        let mut position = Vec3::zero();
        let mut x_xi = Vec3::zero();
        let mut x_eta = Vec3::zero();
        for i in 0..n_local {
            let x = self.nodes[el[i]];
            position += x * values[i];
            x_xi += x * ref_grads[i][0];
            x_eta += x * ref_grads[i][1];
        }
        let cross = x_xi.cross(x_eta);
        let sqrt_det = cross.norm();
        let threshold = S::lit(1e-14) * self.width * self.width;
        if !(sqrt_det > threshold) {
            return Err(FlowError::DegenerateElement { element: e, det: sqrt_det.as_f64() });
        }
        // ∇_Γφ = J G⁻¹ ∇̂φ with G = JᵀJ
        let g11 = x_xi.dot(x_xi);
        let g12 = x_xi.dot(x_eta);
        let g22 = x_eta.dot(x_eta);
        let inv_det = S::one() / (sqrt_det * sqrt_det);
        let mut grads = [Vec3::zero(); MAX_LOCAL];
        for i in 0..n_local {
            let [a, b] = ref_grads[i];
            let c_xi = (g22 * a - g12 * b) * inv_det;
            let c_eta = (g11 * b - g12 * a) * inv_det;
            grads[i] = x_xi * c_xi + x_eta * c_eta;
        }
        Ok(ElementGeometry {
            position,
            sqrt_det,
            weight: r.quadrature.weights[q] * sqrt_det,
            normal: cross * (S::one() / sqrt_det),
            grads,
            n_local,
        })
    }

    /// All quadrature-point geometries of element `e`.
    pub fn element_geometries(&self, e: usize) -> Result<Vec<ElementGeometry<S>>> {
        (0..self.reference.quad_count()).map(|q| self.element_geometry(e, q)).collect()
    }

    /// Area element at every quadrature point, element-major.
    pub fn area_elements(&self) -> Result<Vec<S>> {
        let nq = self.reference.quad_count();
        let mut out = Vec::with_capacity(self.element_count() * nq);
        for e in 0..self.element_count() {
            for q in 0..nq {
                out.push(self.element_geometry(e, q)?.sqrt_det);
            }
        }
        Ok(out)
    }

    pub fn area(&self) -> Result<S> {
        let mut total = S::zero();
        for e in 0..self.element_count() {
            let mut local = S::zero();
            for g in self.element_geometries(e)? {
                local += g.weight;
            }
            total += local;
        }
        Ok(total)
    }

    /// Volume enclosed by the vertex triangulation (positive when oriented
    /// outward).
    pub fn signed_volume(&self) -> S {
        let sixth = S::one() / S::lit(6.0);
        self.vertex_triangles()
            .map(|[a, b, c]| self.nodes[a].dot(self.nodes[b].cross(self.nodes[c])) * sixth)
            .sum()
    }
}

/// Nodal coefficients of a scalar or vector valued finite element function.
#[derive(Clone, Debug, PartialEq)]
pub struct FEFunction<S> {
    pub components: usize,
    pub values: Vec<S>,
}

impl<S: Scalar> FEFunction<S> {
    pub fn new(mesh: &SurfaceMesh<S>, components: usize, values: Vec<S>) -> Result<Self> {
        if values.len() != mesh.node_count() * components {
            return Err(FlowError::SizeMismatch { expected: mesh.node_count() * components, found: values.len() });
        }
        Ok(Self { components, values })
    }

    pub fn scalar(values: Vec<S>) -> Self {
        Self { components: 1, values }
    }

    pub fn from_vectors(vectors: &[Vec3<S>]) -> Self {
        Self { components: 3, values: vectors.iter().flat_map(|v| v.0).collect() }
    }

    pub fn zeros(nodes: usize, components: usize) -> Self {
        Self { components, values: vec![S::zero(); nodes * components] }
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn vector(&self, node: usize) -> Vec3<S> {
        let v = &self.values[3 * node..3 * node + 3];
        Vec3([v[0], v[1], v[2]])
    }

    pub fn to_vectors(&self) -> Vec<Vec3<S>> {
        (0..self.node_count()).map(|i| self.vector(i)).collect()
    }

    /// Component `c` as a scalar nodal vector.
    pub fn component(&self, c: usize) -> Vec<S> {
        self.values.iter().skip(c).step_by(self.components).copied().collect()
    }
}

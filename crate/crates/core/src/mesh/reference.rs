use crate::error::{FlowError, Result};
use crate::mesh::quadrature::TriangleQuadrature;
use crate::Scalar;

/// Upper bound on local nodes per element (quadratic triangles).
pub const MAX_LOCAL: usize = 6;

/// Lagrange reference triangle of degree 1 or 2 with tabulated basis data.
///
/// Local node order: the three vertices `(0,0), (1,0), (0,1)`, then for
/// `k = 2` the midpoints of the edges `0–1`, `1–2`, `2–0`.
#[derive(Clone, Debug)]
pub struct ReferenceElement<S> {
    pub degree: usize,
    pub quadrature: TriangleQuadrature<S>,
    /// `values[q][i] = φ_i(ξ_q)`.
    pub values: Vec<[S; MAX_LOCAL]>,
    /// `gradients[q][i] = ∇̂φ_i(ξ_q)`.
    pub gradients: Vec<[[S; 2]; MAX_LOCAL]>,
}

impl<S: Scalar> ReferenceElement<S> {
    pub fn new(degree: usize, quad_exactness: usize) -> Result<Self> {
        if degree != 1 && degree != 2 {
            return Err(FlowError::UnsupportedDegree(degree));
        }
        let minimum = 2 * degree + 2;
        if quad_exactness < minimum {
            return Err(FlowError::InsufficientQuadrature { degree, requested: quad_exactness, minimum });
        }
        let quadrature = TriangleQuadrature::collapsed_gauss(quad_exactness)?;
        let values = quadrature.points.iter().map(|p| basis(degree, p[0], p[1]).0).collect();
        let gradients = quadrature.points.iter().map(|p| basis(degree, p[0], p[1]).1).collect();
        Ok(Self { degree, quadrature, values, gradients })
    }

    /// Default rule of exactness `2k + 2`.
    pub fn with_default_quadrature(degree: usize) -> Result<Self> {
        Self::new(degree, 2 * degree + 2)
    }

    pub fn local_count(&self) -> usize {
        local_count(self.degree)
    }

    pub fn quad_count(&self) -> usize {
        self.quadrature.len()
    }

    pub fn evaluate(&self, xi: S, eta: S) -> ([S; MAX_LOCAL], [[S; 2]; MAX_LOCAL]) {
        basis(self.degree, xi, eta)
    }

    /// Reference coordinates of the local nodes.
    pub fn nodes(&self) -> Vec<[S; 2]> {
        let h = S::lit(0.5);
        let (z, o) = (S::zero(), S::one());
        let mut out = vec![[z, z], [o, z], [z, o]];
        if self.degree == 2 {
            out.extend([[h, z], [h, h], [z, h]]);
        }
        out
    }
}

pub fn local_count(degree: usize) -> usize {
    if degree == 1 {
        3
    } else {
        6
    }
}

fn basis<S: Scalar>(degree: usize, xi: S, eta: S) -> ([S; MAX_LOCAL], [[S; 2]; MAX_LOCAL]) {
    let z = S::zero();
    let one = S::one();
    let mut v = [z; MAX_LOCAL];
    let mut g = [[z; 2]; MAX_LOCAL];
    let l = [one - xi - eta, xi, eta];
    // ∇̂λ_i
    let dl = [[-one, -one], [one, z], [z, one]];
    if degree == 1 {
        v[..3].copy_from_slice(&l);
        g[..3].copy_from_slice(&dl);
        return (v, g);
    }
    let two = S::lit(2.0);
    let four = S::lit(4.0);
    for i in 0..3 {
        v[i] = l[i] * (two * l[i] - one);
        let c = four * l[i] - one;
        g[i] = [c * dl[i][0], c * dl[i][1]];
    }
    for (m, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
        v[3 + m] = four * l[a] * l[b];
        g[3 + m] = [
            four * (dl[a][0] * l[b] + l[a] * dl[b][0]),
            four * (dl[a][1] * l[b] + l[a] * dl[b][1]),
        ];
    }
    (v, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_half_and_partition_of_unity() {
        for k in [1, 2] {
            let r = ReferenceElement::<f64>::with_default_quadrature(k).unwrap();
            let total: f64 = r.quadrature.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-15);
            for q in 0..r.quad_count() {
                let s: f64 = r.values[q][..r.local_count()].iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
                let gx: f64 = r.gradients[q][..r.local_count()].iter().map(|g| g[0]).sum();
                assert!(gx.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn nodal_property() {
        for k in [1, 2] {
            let r = ReferenceElement::<f64>::with_default_quadrature(k).unwrap();
            for (j, p) in r.nodes().iter().enumerate() {
                let (v, _) = r.evaluate(p[0], p[1]);
                for i in 0..r.local_count() {
                    assert!((v[i] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn p1_basis_integral() {
        let r = ReferenceElement::<f64>::with_default_quadrature(1).unwrap();
        let s: f64 = (0..r.quad_count()).map(|q| r.quadrature.weights[q] * r.values[q][0]).sum();
        assert!((s - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_degree_and_quadrature() {
        assert!(matches!(ReferenceElement::<f64>::new(3, 8), Err(FlowError::UnsupportedDegree(3))));
        assert!(matches!(
            ReferenceElement::<f64>::new(2, 5),
            Err(FlowError::InsufficientQuadrature { minimum: 6, .. })
        ));
    }
}

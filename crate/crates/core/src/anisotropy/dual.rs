use std::collections::HashMap;

use crate::anisotropy::AnisotropyDensity;
use crate::error::{FlowError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::Scalar;

/// Octahedron-based geodesic grid on S².
///
/// Every octant face is split into `resolution²` triangles whose vertices are
/// projected radially; the result has `4·resolution² + 2` unique vertices and
/// `8·resolution²` outward-oriented triangles.
#[derive(Clone, Debug)]
pub struct GeodesicGrid<S> {
    pub points: Vec<Vec3<S>>,
    pub triangles: Vec<[usize; 3]>,
}

impl<S: Scalar> GeodesicGrid<S> {
    pub fn new(resolution: usize) -> Self {
        let n = resolution.max(1) as i64;
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut points = Vec::new();
        let mut triangles = Vec::new();
        let mut vertex = |p: [i64; 3], points: &mut Vec<Vec3<S>>| -> usize {
            *index.entry(p).or_insert_with(|| {
                let v = Vec3::from_f64([p[0] as f64, p[1] as f64, p[2] as f64]);
                points.push(v.normalized());
                points.len() - 1
            })
        };
        for sx in [1i64, -1] {
            for sy in [1i64, -1] {
                for sz in [1i64, -1] {
                    // lattice point (i, j) on the face: (i, j, n − i − j) in octant signs
                    let at = |i: i64, j: i64| [sx * i, sy * j, sz * (n - i - j)];
                    for i in 0..n {
                        for j in 0..(n - i) {
                            let a = vertex(at(i, j), &mut points);
                            let b = vertex(at(i + 1, j), &mut points);
                            let c = vertex(at(i, j + 1), &mut points);
                            triangles.push([a, b, c]);
                            if i + j + 1 < n {
                                let d = vertex(at(i + 1, j + 1), &mut points);
                                triangles.push([b, d, c]);
                            }
                        }
                    }
                }
            }
        }
        for t in triangles.iter_mut() {
            let [a, b, c] = *t;
            let normal = (points[b] - points[a]).cross(points[c] - points[a]);
            if normal.dot(points[a] + points[b] + points[c]) < S::zero() {
                t.swap(1, 2);
            }
        }
        Self { points, triangles }
    }
}

/// Evaluates the dual density `γ*(q) = sup_p p·q / γ(p)` by a grid search
/// over S² followed by a tangent-plane Newton ascent from the best grid
/// direction.
///
/// The grid holds the Frank-diagram boundary points `p/γ(p)`, so the coarse
/// maximum is a single dot product per grid point.
pub struct DualEvaluator<'a, S> {
    density: &'a AnisotropyDensity<S>,
    directions: Vec<Vec3<S>>,
    frank_points: Vec<Vec3<S>>,
}

impl<'a, S: Scalar> DualEvaluator<'a, S> {
    pub fn new(density: &'a AnisotropyDensity<S>, grid_resolution: usize) -> Result<Self> {
        if grid_resolution < 16 {
            return Err(FlowError::InvalidParameter(format!(
                "dual grid resolution {grid_resolution} is below the minimum 16"
            )));
        }
        let grid = GeodesicGrid::<S>::new(grid_resolution);
        let frank_points = grid
            .points
            .iter()
            .map(|&p| Ok(p * (S::one() / density.evaluate(p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { density, directions: grid.points, frank_points })
    }

    pub fn evaluate(&self, q: Vec3<S>) -> Result<S> {
        let scale = q.norm();
        if scale == S::zero() {
            return Err(FlowError::ZeroDirection);
        }
        let q = q * (S::one() / scale);
        let (best_index, grid_best) = self
            .frank_points
            .iter()
            .enumerate()
            .map(|(i, f)| (i, f.dot(q)))
            .fold((0, S::neg_infinity()), |acc, x| if x.1 > acc.1 { x } else { acc });
        let refined = self.ascend(self.directions[best_index], q, grid_best)?;
        Ok(scale * refined.max(grid_best))
    }

    /// Maximises `F(p) = p·q/γ(p)` on the unit sphere starting at `p`.
    fn ascend(&self, mut p: Vec3<S>, q: Vec3<S>, mut value: S) -> Result<S> {
        let tol = S::epsilon() * S::lit(16.0);
        for _ in 0..60 {
            let (gamma, grad, hess) = self.density.derivatives(p)?;
            let pq = p.dot(q);
            let inv = S::one() / gamma;
            // ∇F and ∇²F of the zero-homogeneous objective
            let g = q * inv - grad * (pq * inv * inv);
            let two = S::lit(2.0);
            let h: Mat3<S> = (q.outer(grad) + grad.outer(q)).scale(-inv * inv)
                + grad.outer(grad).scale(two * pq * inv * inv * inv)
                - hess.scale(pq * inv * inv);
            let (t1, t2) = p.tangent_basis();
            let g1 = g.dot(t1);
            let g2 = g.dot(t2);
            if g1.hypot(g2) <= tol * q.norm() {
                break;
            }
            let h11 = h.quadratic_form(t1);
            let h22 = h.quadratic_form(t2);
            let h12 = t1.dot(h.mul_vec(t2));
            let det = h11 * h22 - h12 * h12;
            // Newton if the tangent Hessian is negative definite, else steepest ascent
            let (s1, s2) = if h11 < S::zero() && det > S::zero() {
                ((-h22 * g1 + h12 * g2) / det, (h12 * g1 - h11 * g2) / det)
            } else {
                (g1, g2)
            };
            let mut step = S::one();
            let mut improved = false;
            for _ in 0..40 {
                let candidate = (p + t1 * (s1 * step) + t2 * (s2 * step)).normalized();
                let cv = candidate.dot(q) / self.density.evaluate(candidate)?;
                if cv > value {
                    p = candidate;
                    value = cv;
                    improved = true;
                    break;
                }
                step *= S::lit(0.5);
            }
            if !improved {
                break;
            }
        }
        Ok(value)
    }
}

/// One-shot dual evaluation; see [`DualEvaluator`].
pub fn dual_evaluate<S: Scalar>(density: &AnisotropyDensity<S>, q: Vec3<S>, grid_resolution: usize) -> Result<S> {
    if q.norm() == S::zero() {
        return Err(FlowError::ZeroDirection);
    }
    DualEvaluator::new(density, grid_resolution)?.evaluate(q)
}

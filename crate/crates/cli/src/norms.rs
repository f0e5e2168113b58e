//! Errors against the shrinking ellipsoid, measured on the mesh spanned by
//! the reference trajectories.
//!
//! Two families are reported. The nodal ("interp") norms compare nodal
//! values with the exact fields at the reference nodes and measure the
//! interpolated difference; they superconverge for P2. The pointwise
//! ("exact") norms compare the finite element functions with the exact
//! fields at each quadrature point `y`, using the closest-point lift
//! `π(y) = y − d(y,t)∇d/|∇d|²` for the position and `P = I − ννᵀ` as the
//! exact tangential gradient of the identity.

use rayon::prelude::*;
use serde::Serialize;
use wulff_core::exact::LevelSetSolution;
use wulff_core::integrator::Snapshot;
use wulff_core::linalg::{Mat3, Vec3};
use wulff_core::mesh::SurfaceMesh;
use wulff_core::FlowError;

use crate::error::{HarnessError, Result};

/// Squared contributions of position, normal and velocity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Squares {
    l2: [f64; 3],
    semi: [f64; 3],
}

impl Squares {
    fn add(mut self, o: Self) -> Self {
        for c in 0..3 {
            self.l2[c] += o.l2[c];
            self.semi[c] += o.semi[c];
        }
        self
    }
}

/// L² and H¹ norms of the position, normal and velocity errors, in that
/// order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FieldNorms {
    pub l2: [f64; 3],
    pub h1: [f64; 3],
}

impl FieldNorms {
    fn from_squares(s: Squares) -> Self {
        Self { l2: s.l2.map(f64::sqrt), h1: [0, 1, 2].map(|c| (s.l2[c] + s.semi[c]).sqrt()) }
    }

    /// `(‖e_x‖² + ‖e_ν‖² + ‖e_V‖²)^½` in H¹.
    pub fn combined_h1(&self) -> f64 {
        self.h1.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    fn max(&self, o: &Self) -> Self {
        Self { l2: [0, 1, 2].map(|c| self.l2[c].max(o.l2[c])), h1: [0, 1, 2].map(|c| self.h1[c].max(o.h1[c])) }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorRow {
    pub step: usize,
    pub time: f64,
    pub interp: FieldNorms,
    pub exact: FieldNorms,
}

impl ErrorRow {
    pub const HEADER: &'static str = "step,time,\
interp_l2_x,interp_l2_nu,interp_l2_v,interp_h1_x,interp_h1_nu,interp_h1_v,interp_h1,\
exact_l2_x,exact_l2_nu,exact_l2_v,exact_h1_x,exact_h1_nu,exact_h1_v,exact_h1";

    pub fn csv(&self) -> String {
        let mut cols = vec![self.step.to_string(), self.time.to_string()];
        for f in [&self.interp, &self.exact] {
            cols.extend(f.l2.iter().chain(&f.h1).map(f64::to_string));
            cols.push(f.combined_h1().to_string());
        }
        cols.join(",")
    }
}

/// Per-step rows plus the maxima over time.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub max_interp: FieldNorms,
    pub max_exact: FieldNorms,
    pub max_interp_h1: f64,
    pub max_exact_h1: f64,
}

impl ErrorReport {
    pub fn push(&mut self, row: ErrorRow) {
        self.max_interp = self.max_interp.max(&row.interp);
        self.max_exact = self.max_exact.max(&row.exact);
        self.max_interp_h1 = self.max_interp_h1.max(row.interp.combined_h1());
        self.max_exact_h1 = self.max_exact_h1.max(row.exact.combined_h1());
        self.rows.push(row);
    }
}

/// Both norm families at time `t`. `exact_mesh` carries the reference
/// positions as its nodes; `numeric` is the discrete state on the same
/// connectivity.
pub fn error_row(
    solution: &LevelSetSolution<f64>,
    exact_mesh: &SurfaceMesh<f64>,
    numeric: &Snapshot<f64>,
    step: usize,
    t: f64,
) -> Result<ErrorRow> {
    let n = exact_mesh.node_count();
    for len in [numeric.x.len(), numeric.n.len(), numeric.v.len()] {
        if len != n {
            return Err(FlowError::SizeMismatch { expected: n, found: len }.into());
        }
    }
    if !(t < 0.25) {
        return Err(FlowError::PastBlowup { time: t }.into());
    }
    // nodal differences to the exact fields at the reference nodes
    let nodal: Vec<(Vec3<f64>, Vec3<f64>, f64)> = exact_mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &xs)| {
            let (nu, v) = solution.normal_and_velocity(xs);
            (numeric.x[i] - xs, numeric.n[i] - nu, numeric.v[i] - v)
        })
        .collect();
    let hess = Mat3::diag(solution.dual_metric()).scale(2.0);
    let parts = (0..exact_mesh.element_count())
        .into_par_iter()
        .map(|e| -> Result<(Squares, Squares), FlowError> {
            let el = exact_mesh.element(e);
            let (mut interp, mut exact) = (Squares::default(), Squares::default());
            for q in 0..exact_mesh.reference.quad_count() {
                let g = exact_mesh.element_geometry(e, q)?;
                let phi = &exact_mesh.reference.values[q];
                let w = g.weight;

                let (mut ex, mut en, mut ev) = (Vec3::zero(), Vec3::zero(), 0.0);
                let (mut dgx, mut dgn, mut dgv) = (Mat3::zero(), Mat3::zero(), Vec3::zero());
                let (mut xh, mut nh, mut vh) = (Vec3::zero(), Vec3::zero(), 0.0);
                let (mut gx, mut gn, mut gv) = (Mat3::zero(), Mat3::zero(), Vec3::zero());
                for (i, &node) in el.iter().enumerate() {
                    let (dx, dn, dv) = nodal[node];
                    ex += dx * phi[i];
                    en += dn * phi[i];
                    ev += dv * phi[i];
                    dgx = dgx + g.grads[i].outer(dx);
                    dgn = dgn + g.grads[i].outer(dn);
                    dgv += g.grads[i] * dv;
                    xh += numeric.x[node] * phi[i];
                    nh += numeric.n[node] * phi[i];
                    vh += numeric.v[node] * phi[i];
                    gx = gx + g.grads[i].outer(numeric.x[node]);
                    gn = gn + g.grads[i].outer(numeric.n[node]);
                    gv += g.grads[i] * numeric.v[node];
                }
                interp = interp.add(Squares {
                    l2: [ex.norm_squared(), en.norm_squared(), ev * ev].map(|s| w * s),
                    semi: [dgx.frobenius_norm().powi(2), dgn.frobenius_norm().powi(2), dgv.norm_squared()].map(|s| w * s),
                });

                let y = g.position;
                let grad_d = solution.gradient(y);
                let len = grad_d.norm();
                let nu = grad_d * (1.0 / len);
                let p = Mat3::identity() - nu.outer(nu);
                let lifted = y - grad_d * (solution.value(y, t) / (len * len));
                // jac[ℓ][a] = ∂_a ν_ℓ; the tangential gradient is P·jacᵀ
                let jac = p.mul_mat(&hess).scale(1.0 / len);
                let grad_nu = p.mul_mat(&jac.transpose());
                let v = -solution.time_derivative() / len;
                let grad_v = p.mul_vec(hess.mul_vec(grad_d) * (solution.time_derivative() / (len * len * len)));
                exact = exact.add(Squares {
                    l2: [(xh - lifted).norm_squared(), (nh - nu).norm_squared(), (vh - v) * (vh - v)].map(|s| w * s),
                    semi: [(gx - p).frobenius_norm().powi(2), (gn - grad_nu).frobenius_norm().powi(2), (gv - grad_v).norm_squared()]
                        .map(|s| w * s),
                });
            }
            Ok((interp, exact))
        })
        .collect::<Result<Vec<_>, FlowError>>()?;
    let (interp, exact) = parts.into_iter().fold((Squares::default(), Squares::default()), |(a, b), (c, d)| (a.add(c), b.add(d)));
    Ok(ErrorRow { step, time: t, interp: FieldNorms::from_squares(interp), exact: FieldNorms::from_squares(exact) })
}

/// Guards against comparing states from different times.
pub fn check_times(numeric: f64, reference: f64, tau: f64) -> Result<()> {
    if (numeric - reference).abs() > 1e-9 * tau {
        Err(HarnessError::TimeMismatch { numeric, reference })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use wulff_core::mesh::{generate_levelset_mesh, ReferenceElement};

    use super::*;

    fn setup(level: usize) -> (LevelSetSolution<f64>, SurfaceMesh<f64>, Snapshot<f64>) {
        let sol = LevelSetSolution::new(0.5).unwrap();
        let r = Arc::new(ReferenceElement::with_default_quadrature(2).unwrap());
        let mesh = generate_levelset_mesh(&sol.levelset_at(0.0), level, r).unwrap();
        let (nu, v) = sol.exact_initial_data(&mesh).unwrap();
        let snap = Snapshot { x: mesh.nodes.clone(), n: nu.to_vectors(), v: v.values.clone() };
        (sol, mesh, snap)
    }

    #[test]
    fn nodal_norms_vanish_on_the_exact_data() {
        let (sol, mesh, snap) = setup(2);
        let row = error_row(&sol, &mesh, &snap, 0, 0.0).unwrap();
        assert_eq!(row.interp.combined_h1(), 0.0);
        // the pointwise norms only see the interpolation error
        assert!(row.exact.combined_h1() > 0.0 && row.exact.combined_h1() < 0.5);
    }

    #[test]
    fn nodal_norms_scale_linearly() {
        let (sol, mesh, snap) = setup(1);
        let shifted = |s: f64| Snapshot {
            x: snap.x.iter().map(|x| *x + Vec3::new(s, 0.0, 0.0)).collect(),
            n: snap.n.clone(),
            v: snap.v.iter().map(|v| v + 2.0 * s).collect(),
        };
        let a = error_row(&sol, &mesh, &shifted(1e-3), 0, 0.0).unwrap();
        let b = error_row(&sol, &mesh, &shifted(3e-3), 0, 0.0).unwrap();
        for c in 0..3 {
            assert!((b.interp.h1[c] - 3.0 * a.interp.h1[c]).abs() <= 1e-12 * b.interp.h1[c].max(1e-300));
        }
        // a constant shift has no gradient, so the H¹ and L² norms agree
        assert!((a.interp.h1[0] - a.interp.l2[0]).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_snapshots() {
        let (sol, mesh, mut snap) = setup(1);
        snap.v.pop();
        assert!(error_row(&sol, &mesh, &snap, 0, 0.0).is_err());
        assert!(check_times(0.1, 0.1 + 1e-6, 1e-3).is_err());
        assert!(check_times(0.1, 0.1 + 1e-15, 1e-3).is_ok());
    }

    #[test]
    fn csv_row_matches_header() {
        let row = ErrorRow::default();
        assert_eq!(row.csv().split(',').count(), ErrorRow::HEADER.split(',').count());
    }
}

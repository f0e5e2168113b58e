//! Symmetric positive definite solves: Jacobi-preconditioned conjugate
//! gradients, with a dense Cholesky fallback for small debugging problems.

use rayon::prelude::*;

use crate::error::{FlowError, Result};
use crate::sparse::SparseMatrix;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    ConjugateGradient,
    DenseCholesky,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub tolerance: f64,
    /// Defaults to the system dimension (at least 100) when `None`.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::ConjugateGradient,
            tolerance: 1e-10,
            max_iterations: None,
            preconditioner: Preconditioner::Jacobi,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-4) {
            return Err(FlowError::InvalidParameter(format!("solver tolerance {} outside (0, 1e-4]", self.tolerance)));
        }
        if let Some(m) = self.max_iterations {
            if m < n {
                return Err(FlowError::InvalidParameter(format!("max_iterations {m} below system size {n}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport<S> {
    pub x: Vec<S>,
    pub iterations: usize,
    /// `‖Sx − b‖₂ / ‖b‖₂` (absolute residual when `b = 0`).
    pub residual: f64,
    pub converged: bool,
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// Preconditioned CG that always returns its best iterate; `converged`
/// records whether the tolerance was met.
pub fn conjugate_gradient<S: Scalar>(
    matrix: &SparseMatrix<S>,
    b: &[S],
    cfg: &SolverConfig,
    initial: Option<&[S]>,
) -> Result<SolveReport<S>> {
    let n = matrix.dim();
    if b.len() != n {
        return Err(FlowError::SizeMismatch { expected: n, found: b.len() });
    }
    if let Some(x0) = initial {
        if x0.len() != n {
            return Err(FlowError::SizeMismatch { expected: n, found: x0.len() });
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(FlowError::InvalidParameter("right-hand side is not finite".into()));
    }
    let max_iter = cfg.max_iterations.unwrap_or(n.max(100));
    let b_norm = dot(b, b).sqrt();
    if b_norm == S::zero() {
        return Ok(SolveReport { x: vec![S::zero(); n], iterations: 0, residual: 0.0, converged: true });
    }
    let inv_diag: Vec<S> = match cfg.preconditioner {
        Preconditioner::Jacobi => matrix
            .diagonal()
            .into_iter()
            .map(|d| if d > S::zero() { S::one() / d } else { S::one() })
            .collect(),
        Preconditioner::None => vec![S::one(); n],
    };
    let tol = S::lit(cfg.tolerance) * b_norm;
    let mut x = initial.map_or_else(|| vec![S::zero(); n], <[S]>::to_vec);
    let mut r = matrix.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = *bi - *ri;
    }
    let mut r_norm = dot(&r, &r).sqrt();
    let mut z: Vec<S> = r.iter().zip(&inv_diag).map(|(a, d)| *a * *d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![S::zero(); n];
    let mut iterations = 0;
    while r_norm > tol && iterations < max_iter {
        matrix.mul_vec_into(&p, &mut q);
        let curvature = dot(&p, &q);
        if !(curvature > S::zero()) {
            return Err(FlowError::IndefiniteDetected { curvature: curvature.as_f64() });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        r_norm = dot(&r, &r).sqrt();
        iterations += 1;
    }
    // report the true residual, not the recursively updated one
    let sx = matrix.mul_vec(&x);
    let true_res = sx.iter().zip(b).map(|(a, c)| (*a - *c) * (*a - *c)).sum::<S>().sqrt() / b_norm;
    Ok(SolveReport { x, iterations, residual: true_res.as_f64(), converged: r_norm <= tol })
}

/// Solves `S x = b`; fails with [`FlowError::NotConverged`] when the
/// tolerance is not reached.
pub fn solve_spd<S: Scalar>(
    matrix: &SparseMatrix<S>,
    b: &[S],
    cfg: &SolverConfig,
    initial: Option<&[S]>,
) -> Result<SolveReport<S>> {
    cfg.validate(matrix.dim())?;
    let report = match cfg.method {
        SolverMethod::ConjugateGradient => conjugate_gradient(matrix, b, cfg, initial)?,
        SolverMethod::DenseCholesky => {
            let x = dense_cholesky_solve(matrix, b)?;
            let sx = matrix.mul_vec(&x);
            let b_norm = dot(b, b).sqrt();
            let res = sx.iter().zip(b).map(|(a, c)| (*a - *c) * (*a - *c)).sum::<S>().sqrt();
            let residual = if b_norm > S::zero() { res / b_norm } else { res };
            SolveReport { x, iterations: 1, residual: residual.as_f64(), converged: true }
        }
    };
    if report.converged {
        Ok(report)
    } else {
        Err(FlowError::NotConverged { iterations: report.iterations, residual: report.residual })
    }
}

/// Solves the same matrix for several right-hand sides concurrently.
pub fn solve_block<S: Scalar>(
    matrix: &SparseMatrix<S>,
    columns: &[Vec<S>],
    cfg: &SolverConfig,
    initial: Option<&[Vec<S>]>,
) -> Result<Vec<SolveReport<S>>> {
    if let Some(init) = initial {
        if init.len() != columns.len() {
            return Err(FlowError::SizeMismatch { expected: columns.len(), found: init.len() });
        }
    }
    columns
        .par_iter()
        .enumerate()
        .map(|(c, b)| solve_spd(matrix, b, cfg, initial.map(|i| i[c].as_slice())))
        .collect()
}

/// Dense `LLᵀ` solve; intended for small systems only.
pub fn dense_cholesky_solve<S: Scalar>(matrix: &SparseMatrix<S>, b: &[S]) -> Result<Vec<S>> {
    let n = matrix.dim();
    if b.len() != n {
        return Err(FlowError::SizeMismatch { expected: n, found: b.len() });
    }
    let mut l = matrix.to_dense();
    for j in 0..n {
        let mut d = l[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > S::zero()) {
            return Err(FlowError::IndefiniteDetected { curvature: d.as_f64() });
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in (j + 1)..n {
            let mut s = l[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let t = l[i][k] * y[k];
            y[i] -= t;
        }
        y[i] /= l[i][i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let t = l[k][i] * y[k];
            y[i] -= t;
        }
        y[i] /= l[i][i];
    }
    Ok(y)
}

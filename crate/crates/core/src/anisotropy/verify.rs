use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anisotropy::AnisotropyDensity;
use crate::error::{FlowError, Result};
use crate::linalg::{min_eigenvalue_sym2, Mat3, Vec3};
use crate::Scalar;

const DEFAULT_SEED: u64 = 0x5eed_0f_a115;

/// Residuals of the structural identities of a density, sampled on S².
///
/// All FD mismatches are relative to the largest entry of the analytic
/// quantity at that direction.
#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub samples: usize,
    pub fd_step: f64,
    /// `max |γ(λw) − λγ(w)| / γ(λw)` for λ drawn from `[0.1, 10]`.
    pub max_homogeneity_residual: f64,
    /// `max |γ′(w)·w − γ(w)|`.
    pub max_gradient_euler_residual: f64,
    /// `max ‖γ″(w)w‖`.
    pub max_hessian_euler_residual: f64,
    pub max_hessian_asymmetry: f64,
    /// Smallest eigenvalue of `γ″(z)` restricted to `z^⊥`, an empirical `c₀`.
    pub min_tangential_rayleigh: f64,
    pub max_gradient_fd_mismatch: f64,
    pub max_hessian_fd_mismatch: f64,
}

/// `count` directions drawn uniformly from S² by rejection sampling.
pub fn sample_unit_directions<S: Scalar>(count: usize, seed: u64) -> Vec<Vec3<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        if r2 > 1e-4 && r2 <= 1.0 {
            let r = r2.sqrt();
            out.push(Vec3::from_f64([p[0] / r, p[1] / r, p[2] / r]));
        }
    }
    out
}

pub fn verify_density<S: Scalar>(density: &AnisotropyDensity<S>, sample_count: usize, fd_step: f64) -> Result<VerificationReport> {
    verify_density_seeded(density, sample_count, fd_step, DEFAULT_SEED)
}

pub fn verify_density_seeded<S: Scalar>(
    density: &AnisotropyDensity<S>,
    sample_count: usize,
    fd_step: f64,
    seed: u64,
) -> Result<VerificationReport> {
    if sample_count < 100 {
        return Err(FlowError::InvalidParameter(format!("sample_count {sample_count} is below 100")));
    }
    if !(1e-7..=1e-4).contains(&fd_step) {
        return Err(FlowError::InvalidParameter(format!("fd_step {fd_step} is outside [1e-7, 1e-4]")));
    }
    let directions = sample_unit_directions::<S>(sample_count, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let h = S::lit(fd_step);
    let two_h = h + h;
    let mut report = VerificationReport {
        samples: sample_count,
        fd_step,
        max_homogeneity_residual: 0.0,
        max_gradient_euler_residual: 0.0,
        max_hessian_euler_residual: 0.0,
        max_hessian_asymmetry: 0.0,
        min_tangential_rayleigh: f64::INFINITY,
        max_gradient_fd_mismatch: 0.0,
        max_hessian_fd_mismatch: 0.0,
    };
    for &w in &directions {
        let (gamma, grad, hess) = density.derivatives(w)?;

        let lambda = S::lit(10f64.powf(rng.gen_range(-1.0..1.0)));
        let scaled = density.evaluate(w * lambda)?;
        let homogeneity = ((scaled - lambda * gamma).abs() / scaled).as_f64();
        let euler_grad = (grad.dot(w) - gamma).abs().as_f64();
        let euler_hess = hess.mul_vec(w).norm().as_f64();

        let (t1, t2) = w.tangent_basis();
        let rayleigh = min_eigenvalue_sym2(hess.quadratic_form(t1), t1.dot(hess.mul_vec(t2)), hess.quadratic_form(t2));

        let mut fd_grad = Vec3::zero();
        let mut fd_hess = Mat3::zero();
        for j in 0..3 {
            let e = Vec3::unit(j) * h;
            fd_grad[j] = (density.evaluate(w + e)? - density.evaluate(w - e)?) / two_h;
            let column = (density.gradient(w + e)? - density.gradient(w - e)?) * (S::one() / two_h);
            for i in 0..3 {
                fd_hess.0[i][j] = column[i];
            }
        }
        let grad_scale = grad.max_abs().max(S::min_positive_value());
        let hess_scale = hess.max_abs().max(S::min_positive_value());
        let grad_mismatch = ((fd_grad - grad).max_abs() / grad_scale).as_f64();
        let hess_mismatch = ((fd_hess - hess).max_abs() / hess_scale).as_f64();

        report.max_homogeneity_residual = report.max_homogeneity_residual.max(homogeneity);
        report.max_gradient_euler_residual = report.max_gradient_euler_residual.max(euler_grad);
        report.max_hessian_euler_residual = report.max_hessian_euler_residual.max(euler_hess);
        report.max_hessian_asymmetry = report.max_hessian_asymmetry.max(hess.max_asymmetry().as_f64());
        report.min_tangential_rayleigh = report.min_tangential_rayleigh.min(rayleigh.as_f64());
        report.max_gradient_fd_mismatch = report.max_gradient_fd_mismatch.max(grad_mismatch);
        report.max_hessian_fd_mismatch = report.max_hessian_fd_mismatch.max(hess_mismatch);
    }
    Ok(report)
}

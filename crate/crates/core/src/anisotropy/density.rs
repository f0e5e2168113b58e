use std::fmt;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::Scalar;

pub type ScalarFn<S> = Arc<dyn Fn(Vec3<S>) -> S + Send + Sync>;
pub type VectorFn<S> = Arc<dyn Fn(Vec3<S>) -> Vec3<S> + Send + Sync>;
pub type MatrixFn<S> = Arc<dyn Fn(Vec3<S>) -> Mat3<S> + Send + Sync>;

/// User supplied density together with its first and second derivatives.
#[derive(Clone)]
pub struct CustomDensity<S> {
    pub value: ScalarFn<S>,
    pub gradient: VectorFn<S>,
    pub hessian: MatrixFn<S>,
    pub strongly_convex: bool,
}

#[derive(Clone)]
pub enum DensityKind<S> {
    /// `γ(w) = |w|`.
    Isotropic,
    /// `γ(w) = √(w·Gw)` with symmetric positive definite `G`.
    Ellipsoidal(Mat3<S>),
    /// `γ(w) = (Σ_ℓ γ_ℓ(w)^r)^{1/r}` over ellipsoidal `γ_ℓ`, `r ≥ 1`.
    Combination { exponent: S, metrics: Vec<Mat3<S>> },
    /// `γ(w) = (a(w₁) w₁ᵖ + w₂ᵖ + w₃ᵖ)^{1/p}` with `a = 5.5 + 4.5 sign(w₁)`
    /// and `sign(0) = +1`.
    AsymmetricPower { power: u32 },
    Custom(CustomDensity<S>),
}

impl<S: fmt::Debug> fmt::Debug for DensityKind<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityKind::Isotropic => write!(f, "Isotropic"),
            DensityKind::Ellipsoidal(g) => f.debug_tuple("Ellipsoidal").field(g).finish(),
            DensityKind::Combination { exponent, metrics } => f
                .debug_struct("Combination")
                .field("exponent", exponent)
                .field("metrics", &metrics.len())
                .finish(),
            DensityKind::AsymmetricPower { power } => write!(f, "AsymmetricPower({power})"),
            DensityKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Positively one-homogeneous anisotropy density with closed-form derivatives.
#[derive(Clone, Debug)]
pub struct AnisotropyDensity<S> {
    pub kind: DensityKind<S>,
    pub label: String,
}

/// Metric `ε²I + (1 − ε²) a aᵀ` of an ε-regularised `|a·w|`.
fn regularized_axis_metric<S: Scalar>(axis: Vec3<S>, eps: S) -> Mat3<S> {
    let e2 = eps * eps;
    Mat3::identity().scale(e2) + axis.outer(axis).scale(S::one() - e2)
}

/// Rotations `R_ℓ` used by the hexagonal density, each mapping its symmetry
/// axis onto `e₁`: the first sends `e₃ ↦ e₁`, the remaining three are
/// rotations about `e₃` by `0, −π/3, −2π/3`, sending the in-plane axes at
/// angles `0, π/3, 2π/3` onto `e₁`. The resulting Wulff shape is an
/// ε-rounded hexagonal prism with its axis along `e₃`.
pub fn hexagonal_rotations<S: Scalar>() -> [Mat3<S>; 4] {
    let about_e3 = |theta: f64| {
        let (s, c) = theta.sin_cos();
        Mat3::from_f64([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    };
    [
        Mat3::from_f64([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]]),
        about_e3(0.0),
        about_e3(std::f64::consts::FRAC_PI_3),
        about_e3(2.0 * std::f64::consts::FRAC_PI_3),
    ]
}

impl<S: Scalar> AnisotropyDensity<S> {
    pub fn isotropic() -> Self {
        Self { kind: DensityKind::Isotropic, label: "isotropic".into() }
    }

    pub fn ellipsoidal(g: Mat3<S>) -> Self {
        let d = g.to_f64();
        let label = format!("ellipsoidal:{},{},{}", d[0][0], d[1][1], d[2][2]);
        Self { kind: DensityKind::Ellipsoidal(g), label }
    }

    pub fn ellipsoidal_diag(g: [f64; 3]) -> Self {
        Self::ellipsoidal(Mat3::diag(Vec3::from_f64(g)))
    }

    /// The self-similar test density `G = diag(1, ε², ε²)`.
    pub fn ellipsoid_family(eps: f64) -> Self {
        Self::ellipsoidal_diag([1.0, eps * eps, eps * eps])
    }

    pub fn combination(exponent: S, metrics: Vec<Mat3<S>>, label: impl Into<String>) -> Self {
        Self { kind: DensityKind::Combination { exponent, metrics }, label: label.into() }
    }

    /// `Σ_ℓ √(ε²|w|² + (1 − ε²) w_ℓ²)`: an ε-regularised ℓ¹ norm.
    pub fn regularized_l1(eps: f64) -> Self {
        let e = S::lit(eps);
        let metrics = (0..3).map(|l| regularized_axis_metric(Vec3::unit(l), e)).collect();
        Self::combination(S::one(), metrics, format!("l1reg:{eps}"))
    }

    /// `(Σ_ℓ [ε²|w|² + (1 − ε²) w_ℓ²]^{r/2})^{1/r}`.
    pub fn cubic(eps: f64, exponent: f64) -> Self {
        let e = S::lit(eps);
        let metrics = (0..3).map(|l| regularized_axis_metric(Vec3::unit(l), e)).collect();
        Self::combination(S::lit(exponent), metrics, format!("cubic:{eps},{exponent}"))
    }

    /// `Σ_ℓ √(w · R_ℓᵀ diag(1, ε², ε²) R_ℓ w)` with the rotations of
    /// [`hexagonal_rotations`].
    pub fn hexagonal(eps: f64) -> Self {
        let e2 = S::lit(eps * eps);
        let base = Mat3::diag(Vec3([S::one(), e2, e2]));
        let metrics = hexagonal_rotations::<S>()
            .iter()
            .map(|r| r.transpose().mul_mat(&base).mul_mat(r).symmetric_part())
            .collect();
        Self::combination(S::one(), metrics, format!("hexagonal:{eps}"))
    }

    pub fn asymmetric(power: u32) -> Self {
        assert!(power >= 4 && power % 2 == 0, "asymmetric density needs an even power >= 4");
        Self { kind: DensityKind::AsymmetricPower { power }, label: format!("asym{power}") }
    }

    pub fn custom(custom: CustomDensity<S>, label: impl Into<String>) -> Self {
        Self { kind: DensityKind::Custom(custom), label: label.into() }
    }

    /// Parses the run-configuration key, e.g. `"ellipsoidal:1,0.25,0.25"`.
    pub fn from_key(key: &str) -> Result<Self> {
        let bad = |msg: &str| FlowError::InvalidParameter(format!("density key {key:?}: {msg}"));
        let (name, args) = match key.split_once(':') {
            Some((n, a)) => (n.trim(), a.trim()),
            None => (key.trim(), ""),
        };
        let numbers = || -> Result<Vec<f64>> {
            if args.is_empty() {
                return Ok(Vec::new());
            }
            args.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad("malformed number")))
                .collect()
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let density = match name {
            "isotropic" if args.is_empty() => Self::isotropic(),
            "ellipsoidal" => match numbers()?.as_slice() {
                &[a, b, c] if positive(a) && positive(b) && positive(c) => Self::ellipsoidal_diag([a, b, c]),
                _ => return Err(bad("expected three positive diagonal entries")),
            },
            "l1reg" => match numbers()?.as_slice() {
                &[eps] if positive(eps) && eps <= 1.0 => Self::regularized_l1(eps),
                _ => return Err(bad("expected one regularisation parameter in (0, 1]")),
            },
            "cubic" => match numbers()?.as_slice() {
                &[eps, r] if positive(eps) && eps <= 1.0 && r >= 1.0 => Self::cubic(eps, r),
                _ => return Err(bad("expected <eps>,<r> with eps in (0, 1] and r >= 1")),
            },
            "hexagonal" => match numbers()?.as_slice() {
                &[eps] if positive(eps) && eps <= 1.0 => Self::hexagonal(eps),
                _ => return Err(bad("expected one regularisation parameter in (0, 1]")),
            },
            "asym4" if args.is_empty() => Self::asymmetric(4),
            _ => return Err(bad("unknown density")),
        };
        Ok(density)
    }

    /// Whether the kind satisfies a uniform tangential convexity bound.
    /// The asymmetric power density degenerates along the coordinate axes.
    pub fn is_strongly_convex(&self) -> bool {
        match &self.kind {
            DensityKind::AsymmetricPower { .. } => false,
            DensityKind::Custom(c) => c.strongly_convex,
            _ => true,
        }
    }

    pub fn evaluate(&self, w: Vec3<S>) -> Result<S> {
        let norm = check_direction(w)?;
        let value = match &self.kind {
            DensityKind::Isotropic => norm,
            DensityKind::Ellipsoidal(g) => g.quadratic_form(w).sqrt(),
            DensityKind::Combination { exponent, metrics } => combination_value(*exponent, metrics, w).0,
            DensityKind::AsymmetricPower { power } => asymmetric_value(*power, w),
            DensityKind::Custom(c) => (c.value)(w),
        };
        finite_scalar(value, w)
    }

    /// The Cahn–Hoffman map `γ′(w)`.
    pub fn gradient(&self, w: Vec3<S>) -> Result<Vec3<S>> {
        let norm = check_direction(w)?;
        let grad = match &self.kind {
            DensityKind::Isotropic => w * (S::one() / norm),
            DensityKind::Ellipsoidal(g) => {
                let gw = g.mul_vec(w);
                gw * (S::one() / w.dot(gw).sqrt())
            }
            DensityKind::Combination { exponent, metrics } => combination_derivatives(*exponent, metrics, w, false).1,
            DensityKind::AsymmetricPower { power } => asymmetric_derivatives(*power, w, false).1,
            DensityKind::Custom(c) => (c.gradient)(w),
        };
        if grad.is_finite() {
            Ok(grad)
        } else {
            Err(FlowError::NonFinite { direction: w.to_f64() })
        }
    }

    /// `γ″(w)`, or `γ″(w) + w wᵀ` when `stabilized`.
    pub fn hessian(&self, w: Vec3<S>, stabilized: bool) -> Result<Mat3<S>> {
        let norm = check_direction(w)?;
        let hess = match &self.kind {
            DensityKind::Isotropic => {
                let inv = S::one() / norm;
                let u = w * inv;
                (Mat3::identity() - u.outer(u)).scale(inv)
            }
            DensityKind::Ellipsoidal(g) => {
                let gw = g.mul_vec(w);
                let gamma = w.dot(gw).sqrt();
                let inv = S::one() / gamma;
                g.scale(inv) - gw.outer(gw).scale(inv * inv * inv)
            }
            DensityKind::Combination { exponent, metrics } => combination_derivatives(*exponent, metrics, w, true).2,
            DensityKind::AsymmetricPower { power } => asymmetric_derivatives(*power, w, true).2,
            DensityKind::Custom(c) => (c.hessian)(w),
        };
        if !hess.is_finite() {
            return Err(FlowError::NonFinite { direction: w.to_f64() });
        }
        Ok(if stabilized { hess + w.outer(w) } else { hess })
    }

    /// Value, Cahn–Hoffman vector and Hessian in one pass.
    pub fn derivatives(&self, w: Vec3<S>) -> Result<(S, Vec3<S>, Mat3<S>)> {
        let out = match &self.kind {
            DensityKind::Combination { exponent, metrics } => {
                check_direction(w)?;
                combination_derivatives(*exponent, metrics, w, true)
            }
            DensityKind::AsymmetricPower { power } => {
                check_direction(w)?;
                asymmetric_derivatives(*power, w, true)
            }
            _ => (self.evaluate(w)?, self.gradient(w)?, self.hessian(w, false)?),
        };
        if out.0.is_finite() && out.1.is_finite() && out.2.is_finite() {
            Ok(out)
        } else {
            Err(FlowError::NonFinite { direction: w.to_f64() })
        }
    }
}

fn check_direction<S: Scalar>(w: Vec3<S>) -> Result<S> {
    let norm = w.norm();
    if norm == S::zero() {
        return Err(FlowError::ZeroDirection);
    }
    if !norm.is_finite() {
        return Err(FlowError::NonFinite { direction: w.to_f64() });
    }
    Ok(norm)
}

fn finite_scalar<S: Scalar>(value: S, w: Vec3<S>) -> Result<S> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(FlowError::NonFinite { direction: w.to_f64() })
    }
}

/// Returns `(γ, component values γ_ℓ)`, evaluated with the largest component
/// factored out so that large exponents do not overflow.
fn combination_value<S: Scalar>(exponent: S, metrics: &[Mat3<S>], w: Vec3<S>) -> (S, Vec<S>) {
    let parts: Vec<S> = metrics.iter().map(|g| g.quadratic_form(w).sqrt()).collect();
    let largest = parts.iter().fold(S::zero(), |m, &p| m.max(p));
    let sum: S = parts.iter().map(|&p| (p / largest).powf(exponent)).sum();
    (largest * sum.powf(S::one() / exponent), parts)
}

fn combination_derivatives<S: Scalar>(
    exponent: S,
    metrics: &[Mat3<S>],
    w: Vec3<S>,
    want_hessian: bool,
) -> (S, Vec3<S>, Mat3<S>) {
    let (gamma, parts) = combination_value(exponent, metrics, w);
    let r1 = exponent - S::one();
    let mut grad = Vec3::zero();
    let mut hess = Mat3::zero();
    let mut outer_sum = Mat3::zero();
    for (g, &part) in metrics.iter().zip(&parts) {
        let gw = g.mul_vec(w);
        let inv = S::one() / part;
        let part_grad = gw * inv;
        // σ_ℓ = γ_ℓ / γ ∈ (0, 1]
        let ratio = part / gamma;
        let weight = if r1 == S::zero() { S::one() } else { ratio.powf(r1) };
        grad += part_grad * weight;
        if want_hessian {
            let part_hess = g.scale(inv) - gw.outer(gw).scale(inv * inv * inv);
            hess = hess + part_hess.scale(weight);
            if r1 != S::zero() {
                outer_sum = outer_sum + part_grad.outer(part_grad).scale(weight / ratio);
            }
        }
    }
    if want_hessian && r1 != S::zero() {
        hess = hess + (outer_sum - grad.outer(grad)).scale(r1 / gamma);
    }
    (gamma, grad, hess)
}

fn asymmetric_weight<S: Scalar>(axis: usize, w: Vec3<S>) -> S {
    // sign(0) := +1
    if axis == 0 && w[0] >= S::zero() {
        S::lit(10.0)
    } else {
        S::one()
    }
}

fn asymmetric_value<S: Scalar>(power: u32, w: Vec3<S>) -> S {
    let largest = w.max_abs();
    let p = power as i32;
    let sum: S = (0..3).map(|i| asymmetric_weight(i, w) * (w[i] / largest).powi(p)).sum();
    largest * sum.powf(S::one() / S::from_usize_lossy(power as usize))
}

fn asymmetric_derivatives<S: Scalar>(power: u32, w: Vec3<S>, want_hessian: bool) -> (S, Vec3<S>, Mat3<S>) {
    let gamma = asymmetric_value(power, w);
    let p = power as i32;
    let scaled = w * (S::one() / gamma);
    let mut grad = Vec3::zero();
    let mut diag = Vec3::zero();
    for i in 0..3 {
        let a = asymmetric_weight(i, w);
        grad[i] = a * scaled[i].powi(p - 1);
        diag[i] = a * scaled[i].powi(p - 2);
    }
    let mut hess = Mat3::zero();
    if want_hessian {
        let factor = S::from_usize_lossy(power as usize - 1) / gamma;
        hess = (Mat3::diag(diag) - grad.outer(grad)).scale(factor);
    }
    (gamma, grad, hess)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn evaluate_examples() {
        let iso = AnisotropyDensity::<f64>::isotropic();
        assert_eq!(iso.evaluate(v(3.0, 4.0, 0.0)).unwrap(), 5.0);
        let ell = AnisotropyDensity::<f64>::ellipsoidal_diag([1.0, 0.25, 0.25]);
        assert!((ell.evaluate(v(0.0, 1.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        let asym = AnisotropyDensity::<f64>::asymmetric(4);
        assert!((asym.evaluate(v(-1.0, 0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        // a(+) = 10 on the positive w₁ side
        assert!((asym.evaluate(v(1.0, 0.0, 0.0)).unwrap() - 10f64.powf(0.25)).abs() < 1e-14);
    }

    #[test]
    fn zero_direction_is_rejected() {
        let iso = AnisotropyDensity::<f64>::isotropic();
        assert!(matches!(iso.evaluate(Vec3::zero()), Err(FlowError::ZeroDirection)));
        assert!(matches!(iso.gradient(Vec3::zero()), Err(FlowError::ZeroDirection)));
        assert!(matches!(iso.hessian(Vec3::zero(), true), Err(FlowError::ZeroDirection)));
    }

    #[test]
    fn gradient_examples() {
        let ell = AnisotropyDensity::<f64>::ellipsoidal_diag([1.0, 0.25, 0.25]);
        let w = v(1.0, 1.0, 0.0);
        let g = ell.gradient(w).unwrap();
        assert!((g[0] - 0.894427190999916).abs() < 1e-12);
        assert!((g[1] - 0.223606797749979).abs() < 1e-12);
        assert_eq!(g[2], 0.0);
        assert!((g.dot(w) - 1.118033988749895).abs() < 1e-12);
        let iso = AnisotropyDensity::<f64>::isotropic();
        assert_eq!(iso.gradient(v(0.0, 0.0, 2.0)).unwrap(), v(0.0, 0.0, 1.0));
    }

    #[test]
    fn isotropic_hessian_and_stabilization() {
        let iso = AnisotropyDensity::<f64>::isotropic();
        let h = iso.hessian(v(0.0, 0.0, 1.0), false).unwrap();
        assert_eq!(h, Mat3::diag(v(1.0, 1.0, 0.0)));
        let hs = iso.hessian(v(0.0, 0.0, 1.0), true).unwrap();
        assert_eq!(hs, Mat3::identity());
    }

    #[test]
    fn cubic_with_large_exponent_stays_finite() {
        let cubic = AnisotropyDensity::<f64>::cubic(0.01, 30.0);
        let w = v(1e150, 3e149, -2e149);
        let (g, grad, hess) = cubic.derivatives(w).unwrap();
        assert!(g.is_finite() && grad.is_finite() && hess.is_finite());
        assert!((grad.dot(w) / g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn combination_with_unit_exponent_matches_sum_of_parts() {
        let l1 = AnisotropyDensity::<f64>::regularized_l1(0.1);
        let w = v(0.3, -0.5, 0.8);
        let expected: f64 = (0..3)
            .map(|l| (0.01 * w.norm_squared() + w[l] * w[l] * 0.99).sqrt())
            .sum();
        assert!((l1.evaluate(w).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn hexagonal_metrics_have_expected_axes() {
        let hex = AnisotropyDensity::<f64>::hexagonal(0.1);
        let DensityKind::Combination { metrics, .. } = &hex.kind else { panic!() };
        assert_eq!(metrics.len(), 4);
        // the first metric is stiff along e₃
        assert!((metrics[0].0[2][2] - 1.0).abs() < 1e-14);
        assert!((metrics[0].0[0][0] - 0.01).abs() < 1e-14);
        // the in-plane axes are 60° apart
        let axis = |g: &Mat3<f64>| {
            let a = (g.0[0][0] - 0.01).max(0.0).sqrt();
            let b = (g.0[1][1] - 0.01).max(0.0).sqrt();
            (a, b)
        };
        let (a, _) = axis(&metrics[1]);
        assert!((a - 0.99f64.sqrt()).abs() < 1e-12);
        let (a2, b2) = axis(&metrics[2]);
        assert!((a2.atan2(b2) - (std::f64::consts::FRAC_PI_6)).abs() < 1e-12);
    }

    #[test]
    fn parse_keys() {
        for key in ["isotropic", "ellipsoidal:1,0.25,0.25", "l1reg:0.1", "cubic:0.01,30", "hexagonal:0.1", "asym4"] {
            assert!(AnisotropyDensity::<f64>::from_key(key).is_ok(), "{key}");
        }
        for key in ["ellipsoidal:1,0", "cubic:0.1", "foo", "asym4:2", "l1reg:x"] {
            assert!(AnisotropyDensity::<f64>::from_key(key).is_err(), "{key}");
        }
    }
}

use std::fmt;

use crate::anisotropy::density::{ScalarFn, VectorFn};
use crate::anisotropy::AnisotropyDensity;
use crate::error::{FlowError, Result};
use crate::linalg::Vec3;
use crate::Scalar;

/// Lower and upper edge of the admissible window for `|ν_h|`.
pub const GUARD_MIN: f64 = 0.5;
pub const GUARD_MAX: f64 = 2.0;

/// Returns `|w|` if it lies in the guard region `[½, 2]`.
pub fn check_guard<S: Scalar>(w: Vec3<S>) -> Result<S> {
    let norm = w.norm();
    if norm >= S::lit(GUARD_MIN) && norm <= S::lit(GUARD_MAX) {
        Ok(norm)
    } else {
        Err(FlowError::OutOfGuardRegion { norm: norm.as_f64(), element: None })
    }
}

#[derive(Clone)]
pub enum KineticCoefficient<S> {
    /// `β ≡ 1`.
    ConstantOne,
    /// `β = 1/γ`, the choice under which Wulff shapes shrink self-similarly.
    InverseGamma(AnisotropyDensity<S>),
    Custom { value: ScalarFn<S>, gradient: VectorFn<S> },
}

impl<S: fmt::Debug> fmt::Debug for KineticCoefficient<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KineticCoefficient::ConstantOne => write!(f, "ConstantOne"),
            KineticCoefficient::InverseGamma(d) => write!(f, "InverseGamma({})", d.label),
            KineticCoefficient::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl<S: Scalar> KineticCoefficient<S> {
    /// Parses `"one"` or `"inverse_gamma"`; the latter binds to `density`.
    pub fn from_key(key: &str, density: &AnisotropyDensity<S>) -> Result<Self> {
        match key.trim() {
            "one" | "constant_one" => Ok(Self::ConstantOne),
            "inverse_gamma" => Ok(Self::InverseGamma(density.clone())),
            other => Err(FlowError::InvalidParameter(format!("unknown kinetic coefficient {other:?}"))),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::ConstantOne)
    }

    pub fn kinetic(&self, w: Vec3<S>) -> Result<S> {
        Ok(self.evaluate(w)?.0)
    }

    pub fn kinetic_gradient(&self, w: Vec3<S>) -> Result<Vec3<S>> {
        Ok(self.evaluate(w)?.1)
    }

    /// `(β(w), β′(w))`, guarded on `|w| ∈ [½, 2]`.
    pub fn evaluate(&self, w: Vec3<S>) -> Result<(S, Vec3<S>)> {
        check_guard(w)?;
        let out = match self {
            Self::ConstantOne => (S::one(), Vec3::zero()),
            Self::InverseGamma(density) => {
                let gamma = density.evaluate(w)?;
                let grad = density.gradient(w)?;
                let inv = S::one() / gamma;
                (inv, grad * (-inv * inv))
            }
            Self::Custom { value, gradient } => (value(w), gradient(w)),
        };
        if out.0.is_finite() && out.1.is_finite() {
            Ok(out)
        } else {
            Err(FlowError::NonFinite { direction: w.to_f64() })
        }
    }

    /// Sampled bounds `(c₂, c₃)` of `β` over the guard shell, taken on the
    /// shells `|v| ∈ {½, 1, 2}` along `samples` directions.
    pub fn bounds(&self, directions: &[Vec3<S>]) -> Result<(S, S)> {
        let mut lo = S::infinity();
        let mut hi = S::neg_infinity();
        for &d in directions {
            for radius in [GUARD_MIN, 1.0, GUARD_MAX] {
                let b = self.kinetic(d.normalized() * S::lit(radius))?;
                lo = lo.min(b);
                hi = hi.max(b);
            }
        }
        Ok((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinetic_examples() {
        let one = KineticCoefficient::<f64>::ConstantOne;
        assert_eq!(one.evaluate(Vec3::new(0.3, 0.4, 0.5)).unwrap(), (1.0, Vec3::zero()));
        let iso = KineticCoefficient::InverseGamma(AnisotropyDensity::<f64>::isotropic());
        assert_eq!(iso.kinetic(Vec3::new(0.0, 1.0, 0.0)).unwrap(), 1.0);
        let ell = KineticCoefficient::InverseGamma(AnisotropyDensity::<f64>::ellipsoidal_diag([1.0, 0.25, 0.25]));
        assert!((ell.kinetic(Vec3::new(0.0, 1.0, 0.0)).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_gamma_gradient_for_isotropic() {
        let iso = KineticCoefficient::InverseGamma(AnisotropyDensity::<f64>::isotropic());
        let w = Vec3::new(0.6, 0.0, 0.8) * 1.5;
        let (_, g) = iso.evaluate(w).unwrap();
        let expected = w * (-1.0 / w.norm().powi(3));
        assert!((g - expected).max_abs() < 1e-15);
    }

    #[test]
    fn guard_region_is_enforced() {
        let one = KineticCoefficient::<f64>::ConstantOne;
        assert!(matches!(
            one.kinetic(Vec3::new(0.1, 0.0, 0.0)),
            Err(FlowError::OutOfGuardRegion { .. })
        ));
        assert!(one.kinetic(Vec3::new(2.5, 0.0, 0.0)).is_err());
        assert!(one.kinetic(Vec3::new(2.0, 0.0, 0.0)).is_ok());
        assert!(one.kinetic(Vec3::new(0.0, 0.5, 0.0)).is_ok());
    }

    #[test]
    fn bounds_for_inverse_gamma() {
        let ell = KineticCoefficient::InverseGamma(AnisotropyDensity::<f64>::ellipsoidal_diag([1.0, 0.25, 0.25]));
        let dirs: Vec<_> = (0..3).map(Vec3::unit).collect();
        let (lo, hi) = ell.bounds(&dirs).unwrap();
        assert!((lo - 0.5).abs() < 1e-14);
        assert!((hi - 4.0).abs() < 1e-14);
    }
}

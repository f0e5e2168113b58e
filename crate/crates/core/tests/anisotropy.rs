use nalgebra::{Matrix3, SymmetricEigen};
use proptest::prelude::*;
use wulff_core::anisotropy::*;
use wulff_core::linalg::{Mat3, Vec3};

const KEYS: [&str; 6] = ["isotropic", "ellipsoidal:1,0.25,0.25", "l1reg:0.1", "cubic:0.01,30", "hexagonal:0.1", "asym4"];

fn density(key: &str) -> AnisotropyDensity<f64> {
    AnisotropyDensity::from_key(key).unwrap()
}

fn nonzero_vec() -> impl Strategy<Value = Vec3<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("away from the origin", |(x, y, z)| x * x + y * y + z * z > 1e-2)
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn to_na(m: &Mat3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m.0[i][j])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn one_homogeneous(w in nonzero_vec(), lambda in 0.05f64..20.0, k in 0usize..6) {
        let d = density(KEYS[k]);
        let g = d.evaluate(w).unwrap();
        prop_assert!((d.evaluate(w * lambda).unwrap() - lambda * g).abs() <= 1e-12 * lambda.max(1.0) * g.max(1.0));
        // the gradient is zero-homogeneous, the Hessian (−1)-homogeneous
        let g1 = d.gradient(w).unwrap();
        let g2 = d.gradient(w * lambda).unwrap();
        prop_assert!((g1 - g2).max_abs() <= 1e-10 * g1.max_abs().max(1.0));
        let h1 = d.hessian(w, false).unwrap();
        let h2 = d.hessian(w * lambda, false).unwrap();
        prop_assert!((h1.scale(1.0 / lambda) - h2).max_abs() <= 1e-9 * h1.max_abs().max(1.0) / lambda);
    }

    #[test]
    fn euler_identities(w in nonzero_vec(), k in 0usize..6) {
        let d = density(KEYS[k]);
        let (g, grad, hess) = d.derivatives(w).unwrap();
        prop_assert!((grad.dot(w) - g).abs() <= 1e-12 * g.max(1.0));
        prop_assert!(hess.mul_vec(w).max_abs() <= 1e-9 * hess.max_abs().max(1.0));
        prop_assert!(hess.max_asymmetry() <= 1e-12 * hess.max_abs().max(1.0));
    }

    #[test]
    fn stabilization_adds_rank_one_term(w in nonzero_vec(), k in 0usize..6) {
        let d = density(KEYS[k]);
        let diff = d.hessian(w, true).unwrap() - d.hessian(w, false).unwrap();
        prop_assert!((diff - w.outer(w)).max_abs() <= 1e-14 * diff.max_abs().max(1.0));
    }

    #[test]
    fn ellipsoidal_hessian_spectrum(w in nonzero_vec(), a in 0.1f64..4.0, b in 0.1f64..4.0, c in 0.1f64..4.0) {
        // γ(w) = √(w·Gw) has γ″ = (G − G w wᵀ G / γ²)/γ, positive semi-definite
        // with exactly one zero eigenvalue along w
        let d = AnisotropyDensity::<f64>::ellipsoidal_diag([a, b, c]);
        let h = to_na(&d.hessian(w, false).unwrap());
        let eig = SymmetricEigen::new(h);
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        let scale = values[2].abs().max(1.0);
        prop_assert!(values[0].abs() <= 1e-10 * scale);
        prop_assert!(values[1] > 0.0);
        let g = nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(a, b, c));
        let wv = nalgebra::Vector3::new(w[0], w[1], w[2]);
        let gamma = (wv.transpose() * g * wv)[0].sqrt();
        let oracle = (g - g * wv * wv.transpose() * g / (gamma * gamma)) / gamma;
        prop_assert!((oracle - h).abs().max() <= 1e-12 * oracle.abs().max().max(1.0));
    }

    #[test]
    fn inverse_gamma_kinetic_is_reciprocal(w in nonzero_vec(), k in 0usize..6) {
        let d = density(KEYS[k]);
        let w = w.normalized();
        let beta = KineticCoefficient::InverseGamma(d.clone());
        let (b, db) = beta.evaluate(w).unwrap();
        let g = d.evaluate(w).unwrap();
        prop_assert!((b * g - 1.0).abs() <= 1e-14);
        // d(1/γ) = −γ′/γ²
        prop_assert!((db + d.gradient(w).unwrap() * (1.0 / (g * g))).max_abs() <= 1e-12 * db.max_abs().max(1.0));
    }

    #[test]
    fn dual_is_bounded_by_frank_support(q in nonzero_vec()) {
        // γ*(q) = sup_{γ(p) ≤ 1} p·q, so p·q ≤ γ(p)γ*(q) for every p
        let d = density("hexagonal:0.1");
        let eval = DualEvaluator::new(&d, 32).unwrap();
        let dual = eval.evaluate(q).unwrap();
        for p in sample_unit_directions::<f64>(64, 3) {
            prop_assert!(p.dot(q) <= d.evaluate(p).unwrap() * dual * (1.0 + 1e-9));
        }
    }
}

#[test]
fn dual_of_ellipsoidal_density_matches_inverse_metric() {
    let d = AnisotropyDensity::<f64>::ellipsoidal_diag([1.0, 0.25, 0.25]);
    let eval = DualEvaluator::new(&d, 64).unwrap();
    for q in sample_unit_directions::<f64>(200, 11) {
        let exact = (q[0] * q[0] + 4.0 * q[1] * q[1] + 4.0 * q[2] * q[2]).sqrt();
        let got = eval.evaluate(q).unwrap();
        assert!((got - exact).abs() <= 1e-8 * exact, "{got} vs {exact}");
    }
}

#[test]
fn dual_is_one_homogeneous() {
    let d = density("cubic:0.01,30");
    let eval = DualEvaluator::new(&d, 32).unwrap();
    let q = Vec3::new(0.3, -0.5, 0.8);
    let a = eval.evaluate(q).unwrap();
    let b = eval.evaluate(q * 3.0).unwrap();
    assert!((b - 3.0 * a).abs() <= 1e-9 * b);
}

#[test]
fn identity_suite_runs_on_every_kind() {
    for key in KEYS {
        let d = density(key);
        let r = verify_density(&d, 500, 1e-5).unwrap();
        assert_eq!(r.samples, 500);
        assert!(r.max_homogeneity_residual <= 1e-9, "{key}: {r:?}");
        assert!(r.max_gradient_euler_residual <= 1e-9, "{key}: {r:?}");
        assert!(r.max_hessian_euler_residual <= 1e-9, "{key}: {r:?}");
        if d.is_strongly_convex() {
            assert!(r.min_tangential_rayleigh > 0.0, "{key}: {r:?}");
        }
    }
}

#[test]
fn asymmetric_density_depends_on_orientation() {
    let d = density("asym4");
    let w = Vec3::new(0.6, 0.0, 0.8);
    let flipped = Vec3::new(-0.6, 0.0, 0.8);
    assert!((d.evaluate(w).unwrap() - d.evaluate(flipped).unwrap()).abs() > 1e-3);
}

#[test]
fn unknown_keys_are_rejected() {
    for key in ["", "cubic:0.1", "ellipsoidal:1,-1,1", "hexagonal:abc", "asym6"] {
        assert!(AnisotropyDensity::<f64>::from_key(key).is_err(), "{key}");
    }
}

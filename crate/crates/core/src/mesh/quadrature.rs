use crate::error::{FlowError, Result};
use crate::Scalar;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess for the i-th root on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n′(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on the reference triangle `{ξ, η ≥ 0, ξ + η ≤ 1}`.
#[derive(Clone, Debug)]
pub struct TriangleQuadrature<S> {
    pub points: Vec<[S; 2]>,
    pub weights: Vec<S>,
    pub exactness: usize,
}

impl<S: Scalar> TriangleQuadrature<S> {
    /// Collapsed (Duffy) tensor Gauss rule exact for polynomials of total
    /// degree `exactness`.
    pub fn collapsed_gauss(exactness: usize) -> Result<Self> {
        if exactness > 60 {
            return Err(FlowError::InvalidParameter(format!("quadrature exactness {exactness} is too large")));
        }
        // the collapsed map adds one degree through its Jacobian (1 − u)
        let n = (exactness + 2).div_ceil(2).max(1);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let u = x[i];
                let v = x[j];
                points.push([S::lit(u), S::lit((1.0 - u) * v)]);
                weights.push(S::lit(w[i] * w[j] * (1.0 - u)));
            }
        }
        Ok(Self { points, weights, exactness })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(S, S) -> S) -> S {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p[0], p[1])).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn gauss_legendre_integrates_to_degree() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            for d in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((s - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn triangle_monomials_are_exact() {
        for exactness in [2, 4, 6, 8] {
            let q = TriangleQuadrature::<f64>::collapsed_gauss(exactness).unwrap();
            for a in 0..=exactness as u32 {
                for b in 0..=(exactness as u32 - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let got = q.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
                    assert!((got - exact).abs() < 1e-15, "{a} {b}");
                }
            }
        }
        let q6 = TriangleQuadrature::<f64>::collapsed_gauss(6).unwrap();
        assert_eq!(q6.len(), 16);
    }
}

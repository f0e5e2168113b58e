//! Exact rational coefficients of BDF and Adams–Bashforth methods.

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{FlowError, Result};
use crate::Scalar;

pub type Rational = Ratio<i64>;

fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn sign(j: usize) -> i64 {
    if j % 2 == 0 {
        1
    } else {
        -1
    }
}

fn check_order(q: usize) -> Result<()> {
    if (1..=5).contains(&q) {
        Ok(())
    } else {
        Err(FlowError::UnsupportedOrder(q))
    }
}

/// Coefficients of `δ(ζ) = Σ_{ℓ=1}^q (1/ℓ)(1 − ζ)^ℓ`, lowest power first.
pub fn bdf_delta(q: usize) -> Result<Vec<Rational>> {
    check_order(q)?;
    Ok((0..=q)
        .map(|j| {
            (1..=q)
                .map(|l| Rational::new(sign(j) * binomial(l, j), l as i64))
                .fold(Rational::zero(), |a, b| a + b)
        })
        .collect())
}

/// Coefficients of `γ(ζ) = (1 − (1 − ζ)^q)/ζ`, lowest power first.
pub fn bdf_gamma(q: usize) -> Result<Vec<Rational>> {
    check_order(q)?;
    Ok((0..q).map(|j| Rational::from_integer(sign(j) * binomial(q, j + 1))).collect())
}

/// Adams–Bashforth weights `b_j` of `y_{n+1} = y_n + τ Σ_j b_j f_{n−j}`.
///
/// `b_j = ∫₀¹ ℓ_j(s) ds` for the Lagrange basis on the nodes `s = 0, −1, …`.
pub fn adams_bashforth(q: usize) -> Result<Vec<Rational>> {
    check_order(q)?;
    Ok((0..q)
        .map(|j| {
            // polynomial coefficients of Π_{m≠j} (s + m)/(m − j), lowest first
            let mut poly = vec![Rational::one()];
            for m in (0..q).filter(|&m| m != j) {
                let scale = Rational::new(1, m as i64 - j as i64);
                let mut next = vec![Rational::zero(); poly.len() + 1];
                for (k, &c) in poly.iter().enumerate() {
                    next[k] += c * Rational::from_integer(m as i64) * scale;
                    next[k + 1] += c * scale;
                }
                poly = next;
            }
            poly.iter()
                .enumerate()
                .map(|(k, &c)| c / Rational::from_integer(k as i64 + 1))
                .fold(Rational::zero(), |a, b| a + b)
        })
        .collect())
}

pub fn to_scalar<S: Scalar>(r: &Rational) -> S {
    S::lit(*r.numer() as f64) / S::lit(*r.denom() as f64)
}

/// A `q`-step linearly implicit BDF method.
#[derive(Clone, Debug, PartialEq)]
pub struct BdfScheme<S> {
    pub order: usize,
    pub delta_exact: Vec<Rational>,
    pub gamma_exact: Vec<Rational>,
    /// `δ_0, …, δ_q`.
    pub delta: Vec<S>,
    /// `γ_0, …, γ_{q−1}`.
    pub gamma: Vec<S>,
}

impl<S: Scalar> BdfScheme<S> {
    pub fn new(q: usize) -> Result<Self> {
        let delta_exact = bdf_delta(q)?;
        let gamma_exact = bdf_gamma(q)?;
        Ok(Self {
            order: q,
            delta: delta_exact.iter().map(to_scalar).collect(),
            gamma: gamma_exact.iter().map(to_scalar).collect(),
            delta_exact,
            gamma_exact,
        })
    }
}

/// Explicit Adams–Bashforth method of order `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamsScheme<S> {
    pub order: usize,
    pub exact: Vec<Rational>,
    pub weights: Vec<S>,
}

impl<S: Scalar> AdamsScheme<S> {
    pub fn new(q: usize) -> Result<Self> {
        let exact = adams_bashforth(q)?;
        Ok(Self { order: q, weights: exact.iter().map(to_scalar).collect(), exact })
    }
}

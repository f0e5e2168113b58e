//! Small fixed-size vectors and matrices in R³.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<S>(pub [S; 3]);

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat3<S>(pub [[S; 3]; 3]);

impl<S: Scalar> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Vec3([x, y, z])
    }

    #[inline]
    pub fn zero() -> Self {
        Vec3([S::zero(); 3])
    }

    pub fn unit(axis: usize) -> Self {
        let mut v = Self::zero();
        v.0[axis] = S::one();
        v
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Vec3([S::lit(v[0]), S::lit(v[1]), S::lit(v[2])])
    }

    pub fn to_f64(self) -> [f64; 3] {
        [self.0[0].as_f64(), self.0[1].as_f64(), self.0[2].as_f64()]
    }

    #[inline]
    pub fn dot(self, o: Self) -> S {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        let [a0, a1, a2] = self.0;
        let [b0, b1, b2] = o.0;
        Vec3([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])
    }

    #[inline]
    pub fn norm_squared(self) -> S {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> S {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Self {
        self * (S::one() / self.norm())
    }

    pub fn max_abs(self) -> S {
        self.0[0].abs().max(self.0[1].abs()).max(self.0[2].abs())
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    #[inline]
    pub fn outer(self, o: Self) -> Mat3<S> {
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * o.0[j];
            }
        }
        m
    }

    pub fn map(self, f: impl Fn(S) -> S) -> Self {
        Vec3([f(self.0[0]), f(self.0[1]), f(self.0[2])])
    }

    /// Two unit vectors completing `self` (assumed unit) to an orthonormal frame.
    pub fn tangent_basis(self) -> (Self, Self) {
        let axis = if self.0[0].abs() < S::lit(0.9) { Self::unit(0) } else { Self::unit(1) };
        let t1 = (axis - self * self.dot(axis)).normalized();
        let t2 = self.cross(t1);
        (t1, t2)
    }
}

impl<S: Scalar> Mat3<S> {
    #[inline]
    pub fn zero() -> Self {
        Mat3([[S::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        Self::diag(Vec3([S::one(); 3]))
    }

    pub fn diag(d: Vec3<S>) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = d.0[i];
        }
        m
    }

    pub fn from_f64(rows: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = S::lit(rows[i][j]);
            }
        }
        m
    }

    pub fn to_f64(self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = self.0[i][j].as_f64();
            }
        }
        m
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3<S>) -> Vec3<S> {
        let r = &self.0;
        Vec3([
            r[0][0] * v.0[0] + r[0][1] * v.0[1] + r[0][2] * v.0[2],
            r[1][0] * v.0[0] + r[1][1] * v.0[1] + r[1][2] * v.0[2],
            r[2][0] * v.0[0] + r[2][1] * v.0[1] + r[2][2] * v.0[2],
        ])
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn symmetric_part(&self) -> Self {
        let half = S::lit(0.5);
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = half * (self.0[i][j] + self.0[j][i]);
            }
        }
        m
    }

    pub fn trace(&self) -> S {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Frobenius product `A : B = tr(A Bᵀ)`.
    pub fn contract(&self, o: &Self) -> S {
        let mut s = S::zero();
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * o.0[i][j];
            }
        }
        s
    }

    pub fn column(&self, j: usize) -> Vec3<S> {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn row(&self, i: usize) -> Vec3<S> {
        Vec3(self.0[i])
    }

    pub fn quadratic_form(&self, v: Vec3<S>) -> S {
        v.dot(self.mul_vec(v))
    }

    pub fn frobenius_norm(&self) -> S {
        self.contract(self).sqrt()
    }

    pub fn max_abs(&self) -> S {
        self.0.iter().flatten().fold(S::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_asymmetry(&self) -> S {
        let mut m = S::zero();
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|c| c.is_finite())
    }

    pub fn scale(&self, s: S) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for c in row.iter_mut() {
                *c *= s;
            }
        }
        m
    }
}

impl<S: Scalar> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<S: Scalar> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<S: Scalar> Mul<S> for Vec3<S> {
    type Output = Self;
    #[inline]
    fn mul(self, s: S) -> Self {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl<S: Scalar> Neg for Vec3<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl<S: Scalar> AddAssign for Vec3<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        for i in 0..3 {
            self.0[i] += o.0[i];
        }
    }
}

impl<S: Scalar> SubAssign for Vec3<S> {
    fn sub_assign(&mut self, o: Self) {
        for i in 0..3 {
            self.0[i] -= o.0[i];
        }
    }
}

impl<S> Index<usize> for Vec3<S> {
    type Output = S;
    #[inline]
    fn index(&self, i: usize) -> &S {
        &self.0[i]
    }
}

impl<S> IndexMut<usize> for Vec3<S> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut S {
        &mut self.0[i]
    }
}

impl<S: Scalar> Add for Mat3<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl<S: Scalar> Sub for Mat3<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] -= o.0[i][j];
            }
        }
        m
    }
}

/// Smallest eigenvalue of a symmetric 2×2 matrix `[[a, b], [b, c]]`.
pub fn min_eigenvalue_sym2<S: Scalar>(a: S, b: S, c: S) -> S {
    let half = S::lit(0.5);
    let mean = half * (a + c);
    let radius = (half * (a - c)).hypot(b);
    mean - radius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_follows_right_hand_rule() {
        let e1 = Vec3::<f64>::unit(0);
        let e2 = Vec3::<f64>::unit(1);
        assert_eq!(e1.cross(e2), Vec3::unit(2));
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        for v in [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8]] {
            let n = Vec3::<f64>::from_f64(v);
            let (t1, t2) = n.tangent_basis();
            assert!(t1.dot(n).abs() < 1e-15 && t2.dot(n).abs() < 1e-15 && t1.dot(t2).abs() < 1e-15);
            assert!((t1.norm() - 1.0).abs() < 1e-15 && (t2.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sym2_eigenvalue() {
        assert!((min_eigenvalue_sym2(2.0, 1.0, 2.0) - 1.0_f64).abs() < 1e-15);
        assert!((min_eigenvalue_sym2(3.0, 0.0, 5.0) - 3.0_f64).abs() < 1e-15);
    }
}

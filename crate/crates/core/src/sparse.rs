//! Compressed sparse row matrices on a shared finite element pattern.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::Scalar;

/// Sparsity pattern of all node pairs that share an element, with a scatter
/// map from element-local entries to positions in the value array.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityPattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    /// `scatter[e * stride² + i * stride + j]` is the value slot of the local
    /// entry `(i, j)` of element `e`.
    pub scatter: Vec<usize>,
    pub stride: usize,
}

impl SparsityPattern {
    pub fn from_elements(n: usize, elements: &[usize], stride: usize) -> Self {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for el in elements.chunks(stride) {
            for &a in el {
                rows[a].extend(el.iter().copied());
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            col_idx.extend(row.iter().copied());
            row_ptr.push(col_idx.len());
        }
        let mut scatter = Vec::with_capacity(elements.len() * stride);
        for el in elements.chunks(stride) {
            for &a in el {
                let cols = &col_idx[row_ptr[a]..row_ptr[a + 1]];
                for &b in el {
                    let pos = cols.binary_search(&b).expect("pattern contains element pairs");
                    scatter.push(row_ptr[a] + pos);
                }
            }
        }
        Self { n, row_ptr, col_idx, scatter, stride }
    }

    /// Pattern holding only the diagonal.
    pub fn diagonal(n: usize) -> Self {
        Self { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), scatter: (0..n).collect(), stride: 1 }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Value slot of entry `(i, j)`, if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|p| self.row_ptr[i] + p)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<S> {
    pub pattern: Arc<SparsityPattern>,
    pub values: Vec<S>,
    pub symmetric: bool,
}

impl<S: Scalar> SparseMatrix<S> {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let nnz = pattern.nnz();
        Self { pattern, values: vec![S::zero(); nnz], symmetric: true }
    }

    /// Builds a matrix from (row, column, value) triplets; duplicates add.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, S)]) -> Self {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(i, j, _) in triplets {
            rows[i].insert(j);
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        for row in &rows {
            col_idx.extend(row.iter().copied());
            row_ptr.push(col_idx.len());
        }
        let pattern = SparsityPattern { n, row_ptr, col_idx, scatter: Vec::new(), stride: 0 };
        let mut values = vec![S::zero(); pattern.nnz()];
        for &(i, j, v) in triplets {
            values[pattern.position(i, j).expect("inserted above")] += v;
        }
        let mut m = Self { pattern: Arc::new(pattern), values, symmetric: false };
        m.symmetric = m.max_asymmetry() <= S::lit(1e-13) * m.max_abs();
        m
    }

    pub fn identity(n: usize) -> Self {
        Self { pattern: Arc::new(SparsityPattern::diagonal(n)), values: vec![S::one(); n], symmetric: true }
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.pattern.position(i, j).map_or(S::zero(), |p| self.values[p])
    }

    /// Adds the dense `stride × stride` block of element `e`.
    pub fn scatter_local(&mut self, e: usize, local: &[S]) {
        let s = self.pattern.stride;
        let slots = &self.pattern.scatter[e * s * s..(e + 1) * s * s];
        for (slot, &v) in slots.iter().zip(local) {
            self.values[*slot] += v;
        }
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[S], y: &mut [S]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = S::zero();
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[S], y: &[S]) -> S {
        self.mul_vec(y).iter().zip(x).map(|(a, b)| *a * *b).sum()
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// `a·self + b·other` on a shared pattern.
    pub fn linear_combination(&self, a: S, other: &Self, b: S) -> Result<Self> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) && self.pattern != other.pattern {
            return Err(FlowError::InvalidParameter("matrices have different sparsity patterns".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        Ok(Self { pattern: self.pattern.clone(), values, symmetric: self.symmetric && other.symmetric })
    }

    pub fn max_abs(&self) -> S {
        self.values.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> S {
        let p = &self.pattern;
        let mut worst = S::zero();
        for i in 0..self.dim() {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Row-major dense copy, for debugging and small direct solves.
    pub fn to_dense(&self) -> Vec<Vec<S>> {
        let n = self.dim();
        let mut d = vec![vec![S::zero(); n]; n];
        let p = &self.pattern;
        for (i, row) in d.iter_mut().enumerate() {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                row[p.col_idx[k]] = self.values[k];
            }
        }
        d
    }

    /// MatrixMarket coordinate text (1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let p = &self.pattern;
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.dim(), self.dim(), self.pattern.nnz());
        for i in 0..self.dim() {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let _ = writeln!(s, "{} {} {:.16e}", i + 1, p.col_idx[k] + 1, self.values[k].as_f64());
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_from_two_triangles() {
        let p = SparsityPattern::from_elements(4, &[0, 1, 2, 1, 3, 2], 3);
        assert_eq!(p.nnz(), 4 + 2 * 5);
        assert!(p.position(0, 3).is_none());
        assert!(p.position(1, 2).is_some());
    }

    #[test]
    fn triplets_and_products() {
        let m = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0), (1, 1, 1.0)]);
        assert!(m.symmetric);
        assert_eq!(m.mul_vec(&[1.0, 1.0]), vec![3.0, 3.0]);
        assert_eq!(m.bilinear(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert!(m.to_matrix_market().contains("2 2 4"));
    }
}

//! Compressed-sparse-row complex matrices.
//!
//! Entries are stored row-major with strictly increasing column indices inside
//! each row, so iteration order (and therefore every reduction built on it) is
//! deterministic.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square sparse complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![ONE; dim])
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, Complex64::new(v, 0.0))))
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and exact zeros are dropped.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut entries: Vec<(usize, usize, Complex64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside {dim}x{dim}");
        }
        entries.sort_by_key(|a| (a.0, a.1));

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if let (Some(&last_r), Some(&last_c)) = (rows.last(), col_idx.last()) {
                if last_r == r && last_c == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != ZERO {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { dim, row_ptr, col_idx: keep_cols, values: keep_vals }
    }

    /// Converts a dense matrix, dropping entries with modulus `<= drop_tol`.
    pub fn from_dense(m: &DMatrix<Complex64>, drop_tol: f64) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operator must be square");
        let n = m.nrows();
        let mut trip = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = m[(r, c)];
                if v.norm() > drop_tol {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(n, trip)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row-major iterator over stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => ZERO,
        }
    }

    fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (r, c, f(v))))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map_values(|v| v * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map_values(|v| v * s)
    }

    pub fn conj(&self) -> Self {
        self.map_values(|v| v.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(self.dim, self.iter().chain(other.iter())))
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(self.dim, self.iter().chain(other.iter().map(|(r, c, v)| (r, c, -v)))))
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut acc = vec![ZERO; n];
        let mut touched = vec![false; n];
        let mut cols: Vec<usize> = Vec::new();
        let mut trip = Vec::new();
        for r in 0..n {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !touched[c] {
                        touched[c] = true;
                        cols.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                trip.push((r, c, acc[c]));
                acc[c] = ZERO;
                touched[c] = false;
            }
            cols.clear();
        }
        Ok(Self::from_triplets(n, trip))
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Kronecker product `a ⊗ b` with index `(i * dim_b + k, j * dim_b + l)`.
    pub fn kron(a: &Operator, b: &Operator) -> Self {
        let nb = b.dim;
        let mut trip = Vec::with_capacity(a.nnz() * b.nnz());
        for (i, j, x) in a.iter() {
            for (k, l, y) in b.iter() {
                trip.push((i * nb + k, j * nb + l, x * y));
            }
        }
        Self::from_triplets(a.dim * nb, trip)
    }

    /// `y = self * x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *out = s;
        }
    }

    pub fn apply_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![ZERO; self.dim];
        self.apply(x, &mut y);
        y
    }

    /// `<x| self |x>` without normalization.
    pub fn sandwich(&self, x: &[Complex64]) -> Complex64 {
        let mut s = ZERO;
        for (r, xr) in x.iter().enumerate() {
            let mut row = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[k] * x[self.col_idx[k]];
            }
            s += xr.conj() * row;
        }
        s
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.sub(&self.adjoint()).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }
}

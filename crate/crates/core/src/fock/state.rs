use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::Operator;
use crate::error::{Error, Result};

/// Pure state as a dense amplitude vector in the fixed vibronic basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Normalized state built from raw amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut s = Self { amplitudes };
        s.normalize()?;
        Ok(s)
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 1e-300) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(())
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `<psi|op|psi> / <psi|psi>`.
    pub fn expectation(&self, op: &Operator) -> Complex64 {
        op.sandwich(&self.amplitudes) / self.norm_sqr()
    }

    pub fn apply(&self, op: &Operator) -> PureState {
        PureState { amplitudes: op.apply_vec(&self.amplitudes) }
    }

    /// `|psi><psi|`, normalized.
    pub fn to_density(&self) -> DensityMatrix {
        let v = DVector::from_column_slice(&self.amplitudes);
        let m = &v * v.adjoint() / Complex64::new(self.norm_sqr(), 0.0);
        DensityMatrix::from_matrix(m)
    }
}

/// Dense density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

/// Outcome of [`DensityMatrix::check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub hermiticity_error: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl PhysicalityReport {
    pub fn is_physical(&self) -> bool {
        self.hermiticity_error < 1e-10 && self.trace_error < 1e-8 && self.min_eigenvalue >= -1e-8
    }
}

impl DensityMatrix {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "density matrix must be square");
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Column-stacked vectorization: `vec[c * D + r] = rho[r, c]`.
    pub fn to_vec(&self) -> Vec<Complex64> {
        self.matrix.as_slice().to_vec()
    }

    pub fn from_vec(dim: usize, v: &[Complex64]) -> Self {
        Self::from_matrix(DMatrix::from_column_slice(dim, dim, v))
    }

    pub fn hermitize(&mut self) {
        let adj = self.matrix.adjoint();
        self.matrix = (&self.matrix + adj) * Complex64::new(0.5, 0.0);
    }

    pub fn normalize_trace(&mut self) -> Result<()> {
        let tr = self.trace().re;
        if !(tr.abs() > 1e-300) {
            return Err(Error::ZeroNorm);
        }
        self.matrix /= Complex64::new(tr, 0.0);
        Ok(())
    }

    /// `Tr[rho op]`.
    pub fn expectation(&self, op: &Operator) -> Complex64 {
        op.iter().map(|(r, c, v)| v * self.matrix[(c, r)]).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut herm = self.clone();
        herm.hermitize();
        let mut ev: Vec<f64> = herm.matrix.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn check(&self) -> PhysicalityReport {
        let herm = (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        PhysicalityReport {
            hermiticity_error: herm,
            trace_error: (self.trace() - Complex64::new(1.0, 0.0)).norm(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    /// `(1/2) Tr|self - other|`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        let diff = DensityMatrix::from_matrix(&self.matrix - &other.matrix);
        Ok(0.5 * diff.eigenvalues().iter().map(|l| l.abs()).sum::<f64>())
    }
}

//! Truncated vibronic Hilbert space: one two-level electronic system tensored
//! with one bosonic vibrational mode.
//!
//! Basis index `i = s * n_cutoff + n` with `s = 0` (ground) or `s = 1`
//! (excited) and Fock number `n < n_cutoff`. Every module relies on this
//! ordering.

mod operator;
mod state;

pub use operator::Operator;
pub use state::{DensityMatrix, PhysicalityReport, PureState};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size of the truncated vibronic space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertSpec {
    n_cutoff: usize,
}

impl HilbertSpec {
    pub fn new(n_cutoff: usize) -> Result<Self> {
        if n_cutoff < 2 {
            return Err(Error::invalid("n_cutoff", format!("must be at least 2, got {n_cutoff}")));
        }
        Ok(Self { n_cutoff })
    }

    /// Number of retained Fock levels.
    pub fn n_cutoff(&self) -> usize {
        self.n_cutoff
    }

    /// Total dimension `2 * n_cutoff`.
    pub fn dim(&self) -> usize {
        2 * self.n_cutoff
    }

    pub fn index(&self, s: usize, n: usize) -> usize {
        debug_assert!(s < 2 && n < self.n_cutoff);
        s * self.n_cutoff + n
    }

    /// Inverse of [`HilbertSpec::index`].
    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.n_cutoff, i % self.n_cutoff)
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Lifts a 2x2 electronic operator to the full space.
pub fn electronic(spec: HilbertSpec, op: &Operator) -> Operator {
    assert_eq!(op.dim(), 2, "electronic operator must be 2x2");
    Operator::kron(op, &Operator::identity(spec.n_cutoff))
}

/// Lifts a vibrational operator to the full space.
pub fn vibrational(spec: HilbertSpec, op: &Operator) -> Operator {
    assert_eq!(op.dim(), spec.n_cutoff, "vibrational operator has wrong dimension");
    Operator::kron(&Operator::identity(2), op)
}

/// Truncated ladder operator `a|n> = sqrt(n)|n-1>` on `n` Fock levels.
pub fn mode_annihilation(n: usize) -> Operator {
    Operator::from_triplets(n, (1..n).map(|k| (k - 1, k, re((k as f64).sqrt()))))
}

pub fn mode_number(n: usize) -> Operator {
    Operator::from_real_diagonal(&(0..n).map(|k| k as f64).collect::<Vec<_>>())
}

pub fn mode_parity(n: usize) -> Operator {
    Operator::from_real_diagonal(&(0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect::<Vec<_>>())
}

/// `I_2 ⊗ b`.
pub fn annihilation(spec: HilbertSpec) -> Operator {
    vibrational(spec, &mode_annihilation(spec.n_cutoff))
}

/// `|g><e| ⊗ I`.
pub fn sigma_minus(spec: HilbertSpec) -> Operator {
    electronic(spec, &Operator::from_triplets(2, [(0, 1, re(1.0))]))
}

/// `σ†σ`, the excited-state projector.
pub fn excited_projector(spec: HilbertSpec) -> Operator {
    electronic(spec, &Operator::from_triplets(2, [(1, 1, re(1.0))]))
}

pub fn ground_projector(spec: HilbertSpec) -> Operator {
    electronic(spec, &Operator::from_triplets(2, [(0, 0, re(1.0))]))
}

/// `b†b`.
pub fn number(spec: HilbertSpec) -> Operator {
    vibrational(spec, &mode_number(spec.n_cutoff))
}

/// `exp[iπ(σ†σ + b†b)]`, diagonal with entries `(-1)^(s+n)`.
pub fn parity(spec: HilbertSpec) -> Operator {
    let diag: Vec<f64> = (0..spec.dim())
        .map(|i| {
            let (s, n) = spec.split(i);
            if (s + n) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Operator::from_real_diagonal(&diag)
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// Dense Fock-basis matrix of `D(α) = exp(α a† − α* a)` on `n` levels, from the
/// exact infinite-space matrix elements.
///
/// Along each diagonal `k = row − col` the scaled Laguerre values
/// `sqrt(j!/(j+k)!) x^(k/2) e^(−x/2) L_j^(k)(x)` with `x = |α|²` obey a
/// three-term recurrence that never overflows.
pub fn mode_displacement_dense(n: usize, alpha: Complex64) -> nalgebra::DMatrix<Complex64> {
    let x = alpha.norm_sqr();
    let theta = alpha.arg();
    let mut out = nalgebra::DMatrix::zeros(n, n);
    for k in 0..n {
        let m0 = if x == 0.0 {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (0.5 * k as f64 * x.ln() - 0.5 * x - 0.5 * ln_factorial(k)).exp()
        };
        let upper = Complex64::from_polar(1.0, k as f64 * theta);
        let lower = Complex64::from_polar(if k % 2 == 0 { 1.0 } else { -1.0 }, -(k as f64) * theta);
        let kf = k as f64;
        let mut prev = 0.0;
        let mut cur = m0;
        for j in 0..(n - k) {
            out[(j + k, j)] = upper * cur;
            if k > 0 {
                out[(j, j + k)] = lower * cur;
            }
            let jf = j as f64;
            let next = ((2.0 * jf + 1.0 + kf - x) * cur - (jf * (jf + kf)).sqrt() * prev)
                / ((jf + 1.0) * (jf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
        }
    }
    out
}

pub fn mode_displacement(n: usize, alpha: Complex64) -> Operator {
    Operator::from_dense(&mode_displacement_dense(n, alpha), 0.0)
}

/// `I_2 ⊗ D(η)` for a real displacement.
pub fn displacement(spec: HilbertSpec, eta: f64) -> Operator {
    vibrational(spec, &mode_displacement(spec.n_cutoff, re(eta)))
}

fn check_amplitude(spec: HilbertSpec, beta: Complex64) -> Result<()> {
    let limit = spec.n_cutoff as f64 / 4.0;
    let beta_sq = beta.norm_sqr();
    if !(beta_sq < limit) {
        return Err(Error::AmplitudeTooLarge { beta_sq, limit });
    }
    Ok(())
}

/// Coherent amplitudes `e^(−|β|²/2) β^n / sqrt(n!)`, truncated, not renormalized.
pub fn coherent_amplitudes(n: usize, beta: Complex64) -> Vec<Complex64> {
    let mut amps = Vec::with_capacity(n);
    let mut a = re((-0.5 * beta.norm_sqr()).exp());
    for k in 0..n {
        amps.push(a);
        a = a * beta / ((k + 1) as f64).sqrt();
    }
    amps
}

fn ground_tensor(spec: HilbertSpec, vib: &[Complex64]) -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(0.0, 0.0); spec.dim()];
    amps[..spec.n_cutoff].copy_from_slice(vib);
    amps
}

/// `|g> ⊗ |β>`.
pub fn coherent_state(spec: HilbertSpec, beta: Complex64) -> Result<PureState> {
    check_amplitude(spec, beta)?;
    PureState::normalized(ground_tensor(spec, &coherent_amplitudes(spec.n_cutoff, beta)))
}

/// Vibrational cat `(|β> ± |−β>)/sqrt(N±)` with `N± = 2 ± 2 e^(−2|β|²)`.
pub fn cat_amplitudes(n: usize, beta: Complex64, sign: i32) -> Result<Vec<Complex64>> {
    if sign != 1 && sign != -1 {
        return Err(Error::invalid("sign", "must be +1 or -1"));
    }
    let s = sign as f64;
    let norm = 2.0 + s * 2.0 * (-2.0 * beta.norm_sqr()).exp();
    if !(norm > 1e-14) {
        return Err(Error::ZeroNorm);
    }
    let plus = coherent_amplitudes(n, beta);
    let minus = coherent_amplitudes(n, -beta);
    let scale = norm.sqrt();
    let mut amps: Vec<Complex64> = plus.iter().zip(&minus).map(|(a, b)| (a + b * s) / scale).collect();
    // Truncation removes a small tail; restore unit norm.
    let n2: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !(n2 > 1e-28) {
        return Err(Error::ZeroNorm);
    }
    let r = n2.sqrt();
    amps.iter_mut().for_each(|a| *a /= r);
    Ok(amps)
}

/// `|g> ⊗ |cat±>`.
pub fn cat_state(spec: HilbertSpec, beta: Complex64, sign: i32) -> Result<PureState> {
    check_amplitude(spec, beta)?;
    let vib = cat_amplitudes(spec.n_cutoff, beta, sign)?;
    PureState::normalized(ground_tensor(spec, &vib))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn spec(n: usize) -> HilbertSpec {
        HilbertSpec::new(n).unwrap()
    }

    #[test]
    fn rejects_tiny_cutoff() {
        assert!(HilbertSpec::new(1).is_err());
        assert_eq!(spec(3).dim(), 6);
        assert_eq!(spec(3).split(4), (1, 1));
    }

    #[test]
    fn annihilation_elements() {
        let a = mode_annihilation(2);
        assert_eq!(a.get(0, 1), re(1.0));
        assert_eq!(a.nnz(), 1);
        assert_abs_diff_eq!(mode_annihilation(4).get(2, 3).re, 3f64.sqrt(), epsilon = 1e-15);
        let b = annihilation(spec(2));
        assert_eq!(b.get(0, 1), re(1.0));
        assert_eq!(b.get(2, 3), re(1.0));
    }

    #[test]
    fn canonical_commutator_below_top_level() {
        let n = 8;
        let a = mode_annihilation(n).to_dense();
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for r in 0..n - 1 {
            for c in 0..n - 1 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(comm[(r, c)].re, want, epsilon = 1e-14);
                assert_abs_diff_eq!(comm[(r, c)].im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sigma_minus_algebra() {
        let sp = spec(2);
        let s = sigma_minus(sp);
        assert_eq!(s.get(0, 2), re(1.0));
        assert_eq!(s.mul(&s).unwrap().nnz(), 0);
        let sd = s.adjoint();
        let anti = sd.mul(&s).unwrap().add(&s.mul(&sd).unwrap()).unwrap();
        assert_eq!(anti.to_dense(), DMatrix::identity(4, 4));
    }

    #[test]
    fn parity_elements() {
        let sp = spec(3);
        let p = parity(sp);
        assert_eq!(p.get(sp.index(0, 0), sp.index(0, 0)), re(1.0));
        assert_eq!(p.get(sp.index(1, 0), sp.index(1, 0)), re(-1.0));
        assert_eq!(p.mul(&p).unwrap(), Operator::identity(6));
    }

    #[test]
    fn parity_anticommutes_with_ladders() {
        let sp = spec(6);
        let p = parity(sp);
        for op in [sigma_minus(sp), annihilation(sp)] {
            let conj = p.mul(&op).unwrap().mul(&p).unwrap();
            assert!(conj.add(&op).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn displacement_vacuum_overlap() {
        let d = mode_displacement_dense(10, re(0.3));
        assert_abs_diff_eq!(d[(0, 0)].re, (-0.045f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(d[(0, 0)].re, 0.955997, epsilon = 1e-6);
    }

    #[test]
    fn zero_displacement_is_identity() {
        assert_eq!(displacement(spec(5), 0.0), Operator::identity(10));
    }

    #[test]
    fn displacement_inverse_on_low_block() {
        let n = 50;
        let dp = mode_displacement_dense(n, re(0.3));
        let dm = mode_displacement_dense(n, re(-0.3));
        let prod = &dp * &dm;
        for r in 0..=30 {
            for c in 0..=30 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((prod[(r, c)] - re(want)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn displacement_matches_series_and_coherent_column() {
        // Low-order exponential series oracle.
        let n = 40;
        let alpha = Complex64::new(0.4, -0.25);
        let a = mode_annihilation(n).to_dense();
        let gen = a.adjoint() * alpha - &a * alpha.conj();
        let mut term = DMatrix::<Complex64>::identity(n, n);
        let mut series = term.clone();
        for k in 1..40 {
            term = &term * &gen / re(k as f64);
            series += &term;
        }
        let exact = mode_displacement_dense(n, alpha);
        for r in 0..20 {
            for c in 0..20 {
                assert!((series[(r, c)] - exact[(r, c)]).norm() < 1e-12, "({r},{c})");
            }
        }
        let col = coherent_amplitudes(n, alpha);
        for r in 0..n {
            assert!((exact[(r, 0)] - col[r]).norm() < 1e-14);
        }
    }

    #[test]
    fn large_displacement_stays_finite_and_unitary_inside() {
        let n = 120;
        let d = mode_displacement_dense(n, Complex64::new(3.0, 2.0));
        assert!(d.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        let prod = d.adjoint() * &d;
        for r in 0..10 {
            assert!((prod[(r, r)] - re(1.0)).norm() < 1e-8, "{r}: {}", prod[(r, r)]);
        }
    }

    #[test]
    fn cat_states() {
        let sp = spec(40);
        let vac = cat_state(sp, re(0.0), 1).unwrap();
        assert_eq!(vac, PureState::basis(80, 0));
        assert!(cat_state(sp, re(0.0), -1).is_err());
        let cat = cat_state(sp, re(2.0), 1).unwrap();
        let n = cat.expectation(&number(sp)).re;
        let e = (-8.0f64).exp();
        assert_abs_diff_eq!(n, 4.0 * (1.0 - e) / (1.0 + e), epsilon = 1e-9);
        assert!(matches!(coherent_state(spec(8), re(1.5)), Err(Error::AmplitudeTooLarge { .. })));
    }

    #[test]
    fn odd_cat_has_odd_parity() {
        let sp = spec(30);
        let cat = cat_state(sp, Complex64::new(1.2, 0.7), -1).unwrap();
        assert_abs_diff_eq!(cat.expectation(&parity(sp)).re, -1.0, epsilon = 1e-10);
    }

    proptest! {
        #[test]
        fn displacement_unitary_on_lower_half(eta in 0.0f64..0.5, n in 30usize..45) {
            let d = mode_displacement_dense(n, re(eta));
            let prod = &d * d.adjoint();
            for r in 0..n / 2 {
                for c in 0..n / 2 {
                    let want = if r == c { 1.0 } else { 0.0 };
                    prop_assert!((prod[(r, c)] - re(want)).norm() < 1e-8);
                }
            }
        }

        #[test]
        fn hermitian_constructors(n in 2usize..12) {
            let sp = spec(n);
            for op in [number(sp), parity(sp), excited_projector(sp), ground_projector(sp)] {
                prop_assert!(op.hermiticity_error() < 1e-12);
            }
        }

        #[test]
        fn coherent_states_are_normalized(re_b in -1.5f64..1.5, im_b in -1.5f64..1.5) {
            let s = coherent_state(spec(40), Complex64::new(re_b, im_b)).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-9);
        }
    }
}

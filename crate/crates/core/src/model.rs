//! Rotating-frame vibronic Hamiltonians built from one parameter record.
//!
//! Every frequency-like field of [`ModelParams`] stores `ν = ω/2π` in GHz.
//! Builders multiply by `2π`, so operators are in rad/ns with `ħ = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, HilbertSpec, Operator};

pub const TWO_PI: f64 = 2.0 * PI;

/// Physical parameters of the driven molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Electronic detuning Δ₀/2π [GHz].
    #[serde(default)]
    pub delta0: f64,
    /// Vibrational detuning Δ_v/2π [GHz].
    #[serde(default)]
    pub delta_v: f64,
    /// Lamb-Dicke parameter (square root of the Franck-Condon factor).
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub omega_zpl_rabi: f64,
    #[serde(default)]
    pub g_s: f64,
    #[serde(default)]
    pub g_as: f64,
    #[serde(default)]
    pub g_as2: f64,
    #[serde(default)]
    pub omega_thz_rabi: f64,
    pub gamma0: f64,
    pub gamma_v: f64,
    #[serde(default)]
    pub gamma_phi_opt: f64,
    #[serde(default)]
    pub gamma_phi_v: f64,
    pub n_cutoff: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            delta0: 0.0,
            delta_v: 0.0,
            eta: 0.3,
            omega_zpl_rabi: 0.0,
            g_s: 0.0,
            g_as: 0.0,
            g_as2: 0.0,
            omega_thz_rabi: 0.0,
            gamma0: 0.04,
            gamma_v: 10.0,
            gamma_phi_opt: 0.0,
            gamma_phi_v: 0.0,
            n_cutoff: 20,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("delta0", self.delta0),
            ("delta_v", self.delta_v),
            ("eta", self.eta),
            ("omega_zpl_rabi", self.omega_zpl_rabi),
            ("g_s", self.g_s),
            ("g_as", self.g_as),
            ("g_as2", self.g_as2),
            ("omega_thz_rabi", self.omega_thz_rabi),
            ("gamma0", self.gamma0),
            ("gamma_v", self.gamma_v),
            ("gamma_phi_opt", self.gamma_phi_opt),
            ("gamma_phi_v", self.gamma_phi_v),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("gamma0", self.gamma0),
            ("gamma_v", self.gamma_v),
            ("gamma_phi_opt", self.gamma_phi_opt),
            ("gamma_phi_v", self.gamma_phi_v),
            ("eta", self.eta),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        HilbertSpec::new(self.n_cutoff)?;
        Ok(())
    }

    pub fn spec(&self) -> Result<HilbertSpec> {
        HilbertSpec::new(self.n_cutoff)
    }
}

/// Which drive terms enter the Hamiltonian. The free part is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSelection {
    #[serde(default)]
    pub zpl: bool,
    #[serde(default)]
    pub stokes: bool,
    #[serde(default)]
    pub anti_stokes: bool,
    #[serde(default)]
    pub anti_stokes2: bool,
    #[serde(default)]
    pub thz: bool,
}

impl DriveSelection {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn zpl_only() -> Self {
        Self { zpl: true, ..Self::default() }
    }

    pub fn anti_stokes_only() -> Self {
        Self { anti_stokes: true, ..Self::default() }
    }

    /// Stokes coupling alone: Jaynes-Cummings form.
    pub fn jaynes_cummings() -> Self {
        Self { stokes: true, ..Self::default() }
    }

    /// Jaynes-Cummings probed by a ZPL laser.
    pub fn jc_with_zpl() -> Self {
        Self { zpl: true, stokes: true, ..Self::default() }
    }

    /// Stokes plus anti-Stokes: generalized Rabi form.
    pub fn generalized_rabi() -> Self {
        Self { stokes: true, anti_stokes: true, ..Self::default() }
    }

    /// Generalized Rabi with the two-vibration anti-Stokes bias.
    pub fn biased_rabi() -> Self {
        Self { anti_stokes2: true, ..Self::generalized_rabi() }
    }

    /// Stokes coupling with a resonant THz drive on the vibration.
    pub fn transducer() -> Self {
        Self { stokes: true, thz: true, ..Self::default() }
    }
}

/// Ladder operators shared by the builders.
struct Ladders {
    sigma: Operator,
    b: Operator,
}

impl Ladders {
    fn new(spec: HilbertSpec) -> Self {
        Self { sigma: fock::sigma_minus(spec), b: fock::annihilation(spec) }
    }
}

fn hermitian_pair(op: &Operator, coeff: f64) -> Operator {
    op.add(&op.adjoint()).expect("same dimension").scale_real(coeff)
}

/// Lab-frame Holstein model `ω₀σ†σ + ω_v b†b + ε₁(b+b†)σ†σ` in angular units.
///
/// Arguments are already angular; this builder does not rescale.
pub fn build_holstein(spec: HilbertSpec, omega0: f64, omega_v: f64, eps1: f64) -> Operator {
    let l = Ladders::new(spec);
    let ee = fock::excited_projector(spec);
    let free = ee.scale_real(omega0).add(&fock::number(spec).scale_real(omega_v)).unwrap();
    let coupling = l.b.add(&l.b.adjoint()).unwrap().mul(&ee).unwrap().scale_real(eps1);
    free.add(&coupling).unwrap()
}

/// Rotating-frame Hamiltonian in rad/ns.
pub fn build_hamiltonian(params: &ModelParams, drives: DriveSelection) -> Result<Operator> {
    params.validate()?;
    let spec = params.spec()?;
    let l = Ladders::new(spec);
    let w = |nu: f64| TWO_PI * nu;

    let mut h = fock::excited_projector(spec)
        .scale_real(w(params.delta0))
        .add(&fock::number(spec).scale_real(w(params.delta_v)))?;

    if drives.zpl {
        h = h.add(&hermitian_pair(&l.sigma, 0.5 * w(params.omega_zpl_rabi)))?;
    }
    if drives.stokes {
        let sb = l.sigma.mul(&l.b.adjoint())?;
        h = h.add(&hermitian_pair(&sb, 0.5 * w(params.g_s)))?;
    }
    if drives.anti_stokes {
        let sb = l.sigma.mul(&l.b)?;
        h = h.add(&hermitian_pair(&sb, 0.5 * w(params.g_as)))?;
    }
    if drives.anti_stokes2 {
        let sbb = l.sigma.mul(&l.b)?.mul(&l.b)?;
        h = h.add(&hermitian_pair(&sbb, 0.5 * w(params.g_as2)))?;
    }
    if drives.thz {
        h = h.add(&hermitian_pair(&l.b, 0.5 * w(params.omega_thz_rabi)))?;
    }
    Ok(h)
}

/// First-order sideband coupling `η Ω`.
pub fn coupling_from_rabi(eta: f64, omega_rabi: f64) -> f64 {
    eta * omega_rabi
}

/// Two-vibration sideband coupling `η² Ω / 2`.
pub fn coupling_second_order(eta: f64, omega_rabi: f64) -> f64 {
    0.5 * eta * eta * omega_rabi
}

/// Quality of the first-order Lamb-Dicke expansion on a low Fock block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    pub eta: f64,
    /// Highest Fock number included in the comparison.
    pub block: usize,
    pub max_deviation: f64,
}

/// Compares `D(η)σ` with `σ + η(b† − b)σ` on vibrational levels `0..=block`.
pub fn truncation_order_check(spec: HilbertSpec, eta: f64, block: usize) -> Result<TruncationReport> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::invalid("eta", "expansion check needs 0 <= eta < 1"));
    }
    if block >= spec.n_cutoff() {
        return Err(Error::invalid("block", "must lie below the cutoff"));
    }
    let l = Ladders::new(spec);
    let exact = fock::displacement(spec, eta).mul(&l.sigma)?;
    let gen = l.b.adjoint().sub(&l.b)?.scale_real(eta);
    let first = l.sigma.add(&gen.mul(&l.sigma)?)?;
    let diff = exact.sub(&first)?;
    let max_deviation = diff
        .iter()
        .filter(|&(r, c, _)| spec.split(r).1 <= block && spec.split(c).1 <= block)
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max);
    Ok(TruncationReport { eta, block, max_deviation })
}

/// Conditional displacement mapping `b ↦ b − ησ†σ` and `σ ↦ D(η)σ`:
/// `|g><g| ⊗ I + |e><e| ⊗ D(η)`.
pub fn polaron_unitary(spec: HilbertSpec, eta: f64) -> Operator {
    let d = fock::mode_displacement(spec.n_cutoff(), Complex64::new(eta, 0.0));
    let g = Operator::from_triplets(2, [(0, 0, Complex64::new(1.0, 0.0))]);
    let e = Operator::from_triplets(2, [(1, 1, Complex64::new(1.0, 0.0))]);
    Operator::kron(&g, &Operator::identity(spec.n_cutoff())).add(&Operator::kron(&e, &d)).unwrap()
}

//! Experimental design calculator: intensities, fields, dipoles, Rabi
//! frequencies and the capacitive gain of an LC-like THz resonator.
//!
//! Inputs use lab units (W/cm², nm, μm², aF, THz); Rabi frequencies are
//! returned as `ν = Ω/2π` in GHz so they can be fed to [`ModelParams`].
//!
//! [`ModelParams`]: crate::model::ModelParams

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TWO_PI;
use crate::observables::rate_from_number;

/// Speed of light [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge [C].
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Fine-structure constant.
pub const ALPHA_FS: f64 = 7.297_352_569_3e-3;
/// Vacuum impedance `1/(c ε₀)` [Ohm].
pub const Z_VAC: f64 = 1.0 / (SPEED_OF_LIGHT * EPSILON_0);

const W_PER_CM2: f64 = 1e4;
const NM: f64 = 1e-9;
const UM: f64 = 1e-6;

fn nonneg(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::invalid(name, "must be finite and non-negative"));
    }
    Ok(())
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(name, "must be finite and positive"));
    }
    Ok(())
}

/// `Ω = ξ √(8π α_fs I / ħ)`, returned as `Ω/2π` in GHz.
pub fn rabi_from_intensity(intensity: f64, dipole_length: f64) -> Result<f64> {
    nonneg("intensity", intensity)?;
    nonneg("dipole_length", dipole_length)?;
    let omega = dipole_length * NM * (8.0 * PI * ALPHA_FS * intensity * W_PER_CM2 / HBAR).sqrt();
    Ok(omega / TWO_PI * 1e-9)
}

/// `Ω = Ω_s √(I / I_s)`.
pub fn rabi_scaling(rabi_at_reference: f64, intensity: f64, reference_intensity: f64) -> Result<f64> {
    nonneg("intensity", intensity)?;
    positive("reference_intensity", reference_intensity)?;
    Ok(rabi_at_reference * (intensity / reference_intensity).sqrt())
}

/// RMS field from `I = (c ε₀ / 2) E²`, in V/m.
pub fn field_from_intensity(intensity: f64) -> Result<f64> {
    nonneg("intensity", intensity)?;
    Ok((2.0 * intensity * W_PER_CM2 / (SPEED_OF_LIGHT * EPSILON_0)).sqrt())
}

/// Inverse of [`field_from_intensity`], in W/cm².
pub fn intensity_from_field(field: f64) -> Result<f64> {
    nonneg("field", field)?;
    Ok(0.5 * SPEED_OF_LIGHT * EPSILON_0 * field * field / W_PER_CM2)
}

/// `Ω/2π = ξ e E / (2πħ)` in GHz.
pub fn rabi_from_field(field: f64, dipole_length: f64) -> Result<f64> {
    nonneg("field", field)?;
    nonneg("dipole_length", dipole_length)?;
    Ok(dipole_length * NM * ELEMENTARY_CHARGE * field / (TWO_PI * HBAR) * 1e-9)
}

/// `ξ_v = √(σ_abs / (4π α_fs Q_v))` in nm, with `σ_abs` in nm².
pub fn vibrational_dipole_from_cross_section(sigma_abs: f64, q_v: f64) -> Result<f64> {
    nonneg("sigma_abs", sigma_abs)?;
    positive("q_v", q_v)?;
    Ok((sigma_abs / (4.0 * PI * ALPHA_FS * q_v)).sqrt())
}

/// Optical or THz drive of a dipole transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveDesign {
    /// W/cm².
    pub intensity: f64,
    /// Dipole length ξ in nm.
    pub dipole_length: f64,
    /// Wavelength in nm.
    pub wavelength: f64,
}

impl DriveDesign {
    pub fn validate(&self) -> Result<()> {
        nonneg("intensity", self.intensity)?;
        nonneg("dipole_length", self.dipole_length)?;
        positive("wavelength", self.wavelength)
    }

    /// `Ω/2π` in GHz.
    pub fn rabi(&self) -> Result<f64> {
        self.validate()?;
        rabi_from_intensity(self.intensity, self.dipole_length)
    }

    pub fn field(&self) -> Result<f64> {
        field_from_intensity(self.intensity)
    }

    /// Diffraction-limited power `π λ² I` in W.
    pub fn focused_power(&self) -> Result<f64> {
        self.validate()?;
        let lambda = self.wavelength * NM;
        Ok(PI * lambda * lambda * self.intensity * W_PER_CM2)
    }
}

/// LC-like metamaterial resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetamaterialDesign {
    pub quality_factor: f64,
    /// Absorption cross section in μm².
    pub cross_section: f64,
    /// Capacitor gap in μm.
    pub gap: f64,
    /// Capacitance in aF.
    pub capacitance: f64,
    /// Resonance `ω_LC/2π` in THz.
    pub frequency: f64,
    /// Impedance `1/(C ω_LC)` in Ohm.
    pub impedance: f64,
}

impl MetamaterialDesign {
    pub fn from_capacitance(
        quality_factor: f64,
        cross_section: f64,
        gap: f64,
        capacitance: f64,
        frequency: f64,
    ) -> Result<Self> {
        positive("capacitance", capacitance)?;
        positive("frequency", frequency)?;
        let impedance = 1.0 / (capacitance * 1e-18 * TWO_PI * frequency * 1e12);
        let d = Self { quality_factor, cross_section, gap, capacitance, frequency, impedance };
        d.validate()?;
        Ok(d)
    }

    pub fn from_impedance(
        quality_factor: f64,
        cross_section: f64,
        gap: f64,
        impedance: f64,
        frequency: f64,
    ) -> Result<Self> {
        positive("impedance", impedance)?;
        positive("frequency", frequency)?;
        let capacitance = 1.0 / (impedance * TWO_PI * frequency * 1e12) * 1e18;
        let d = Self { quality_factor, cross_section, gap, capacitance, frequency, impedance };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        positive("quality_factor", self.quality_factor)?;
        nonneg("cross_section", self.cross_section)?;
        positive("gap", self.gap)?;
        positive("capacitance", self.capacitance)?;
        positive("frequency", self.frequency)?;
        positive("impedance", self.impedance)?;
        let z = 1.0 / (self.capacitance * 1e-18 * TWO_PI * self.frequency * 1e12);
        if ((z - self.impedance) / z).abs() > 1e-9 {
            return Err(Error::invalid("impedance", format!("inconsistent with capacitance and frequency ({z} Ohm)")));
        }
        Ok(())
    }

    /// LC linewidth `γ_LC/2π = ω_LC / (2π Q)` in GHz.
    pub fn linewidth(&self) -> f64 {
        self.frequency * 1e3 / self.quality_factor
    }

    /// Largest cross section `3λ²/(8π)` at this resonance, in μm².
    pub fn max_cross_section(&self) -> f64 {
        let lambda = SPEED_OF_LIGHT / (self.frequency * 1e12) / UM;
        3.0 * lambda * lambda / (8.0 * PI)
    }
}

/// `G_C = √(2 Q σ/d² · Z_LC/Z_vac)`.
pub fn capacitive_gain(design: &MetamaterialDesign) -> Result<f64> {
    design.validate()?;
    Ok((2.0 * design.quality_factor * design.cross_section / (design.gap * design.gap) * design.impedance / Z_VAC)
        .sqrt())
}

/// Vibration-resonator coupling `g_C/2π` in GHz from
/// `ħ g_C = √(e² ħ ω_LC / (2C)) ξ_v / d`.
pub fn capacitive_coupling(design: &MetamaterialDesign, dipole_length: f64) -> Result<f64> {
    design.validate()?;
    nonneg("dipole_length", dipole_length)?;
    let omega = TWO_PI * design.frequency * 1e12;
    let e_c = (ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * HBAR * omega / (2.0 * design.capacitance * 1e-18)).sqrt();
    Ok(e_c * dipole_length * NM / (design.gap * UM) / HBAR / TWO_PI * 1e-9)
}

/// Result of eliminating a fast, lossy resonator mode. Values in GHz (`ν`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonatorElimination {
    /// Capacitive frequency shift `δω_C`.
    pub shift: f64,
    /// Added vibrational damping `Γ_C`.
    pub damping: f64,
    /// Effective vibrational drive `Ω_eff`.
    pub drive: Complex64,
}

/// `c ≈ −(Ω_LC/2 + g_C b)/(Δ_LC − iγ_LC/2)` inserted into the vibration's
/// equation of motion.
pub fn eliminate_resonator(g_c: f64, gamma_lc: f64, delta_lc: f64, omega_lc_rabi: f64) -> Result<ResonatorElimination> {
    positive("gamma_lc", gamma_lc)?;
    let den = delta_lc * delta_lc + 0.25 * gamma_lc * gamma_lc;
    Ok(ResonatorElimination {
        shift: -g_c * g_c * delta_lc / den,
        damping: g_c * g_c * gamma_lc / den,
        drive: -g_c * omega_lc_rabi * Complex64::new(delta_lc, 0.5 * gamma_lc) / den,
    })
}

/// Effective THz Rabi frequency `G_C Ω_THz`.
pub fn effective_thz_rabi(gain: f64, omega_thz_rabi: f64) -> f64 {
    gain * omega_thz_rabi
}

/// Chain from a THz Rabi frequency to a detected count rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransducerPipeline {
    /// Bare `Ω_THz/2π` in GHz.
    pub omega_thz_rabi: f64,
    /// Field enhancement applied to the bare Rabi frequency.
    #[serde(default = "unit_gain")]
    pub gain: f64,
    pub susceptibility: f64,
    /// `γ₀/2π` in GHz.
    pub gamma0: f64,
    pub p_click: f64,
}

fn unit_gain() -> f64 {
    1.0
}

/// Detected rate `p_click Γ_trans/2π = p_click χ Ω² / γ₀`, in kcps.
pub fn transducer_count_rate(p: &TransducerPipeline) -> Result<f64> {
    positive("gamma0", p.gamma0)?;
    nonneg("susceptibility", p.susceptibility)?;
    nonneg("gain", p.gain)?;
    if !(0.0..=1.0).contains(&p.p_click) {
        return Err(Error::invalid("p_click", "must lie in [0, 1]"));
    }
    let omega = effective_thz_rabi(p.gain, p.omega_thz_rabi);
    let population = p.susceptibility * (omega / p.gamma0).powi(2);
    Ok(rate_from_number(population, p.gamma0, p.p_click).kcps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn vacuum_impedance() {
        assert_relative_eq!(Z_VAC, 376.730313, max_relative = 1e-8);
        // α from its defining combination of the other constants.
        let alpha = ELEMENTARY_CHARGE.powi(2) / (4.0 * PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT);
        assert_relative_eq!(alpha, ALPHA_FS, max_relative = 1e-9);
    }

    #[test]
    fn rabi_laws() {
        assert_eq!(rabi_from_intensity(0.0, 0.23).unwrap(), 0.0);
        let a = rabi_from_intensity(30.0, 0.23).unwrap();
        let b = rabi_from_intensity(120.0, 0.23).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
        assert_relative_eq!(rabi_scaling(a, 120.0, 30.0).unwrap(), b, max_relative = 1e-12);
        assert!(rabi_from_intensity(-1.0, 0.23).is_err());
    }

    #[test]
    fn field_values() {
        assert_eq!(field_from_intensity(0.0).unwrap(), 0.0);
        // 100 W/cm² = 1e6 W/m²: E = √(2e6 · Z_vac).
        assert_relative_eq!(field_from_intensity(100.0).unwrap(), (2e6 * 376.730313f64).sqrt(), max_relative = 1e-8);
        assert_relative_eq!(
            field_from_intensity(40.0).unwrap(),
            2.0 * field_from_intensity(10.0).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            intensity_from_field(field_from_intensity(7.0).unwrap()).unwrap(),
            7.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn dipole_from_cross_section() {
        assert_relative_eq!(
            vibrational_dipole_from_cross_section(1e-5, 100.0).unwrap(),
            1.0443e-3,
            max_relative = 1e-3
        );
        assert_eq!(vibrational_dipole_from_cross_section(0.0, 100.0).unwrap(), 0.0);
        let a = vibrational_dipole_from_cross_section(1e-5, 100.0).unwrap();
        let b = vibrational_dipole_from_cross_section(1e-5, 400.0).unwrap();
        assert_relative_eq!(a / b, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn metamaterial_gain() {
        let d = MetamaterialDesign::from_impedance(10.0, 90.0, 1.0, 100.0, 5.0).unwrap();
        assert_relative_eq!(capacitive_gain(&d).unwrap(), (1800.0 * 100.0 / 376.730313f64).sqrt(), max_relative = 1e-8);
        let c = MetamaterialDesign::from_capacitance(10.0, 90.0, 1.0, 320.0, 4.97).unwrap();
        assert!((c.impedance - 100.0).abs() < 1.0);
        let zero = MetamaterialDesign { cross_section: 0.0, ..d };
        assert_eq!(capacitive_gain(&zero).unwrap(), 0.0);
        let bad = MetamaterialDesign { impedance: 101.0, ..d };
        assert!(bad.validate().is_err());
        let lambda60 =
            MetamaterialDesign::from_impedance(10.0, 90.0, 1.0, 100.0, SPEED_OF_LIGHT / 60e-6 / 1e12).unwrap();
        assert!((lambda60.max_cross_section() - 430.0).abs() < 2.0);
    }

    #[test]
    fn resonator_elimination() {
        let r = eliminate_resonator(2.0, 500.0, 0.0, 3.0).unwrap();
        assert_eq!(r.shift, 0.0);
        assert_relative_eq!(r.damping, 4.0 * 4.0 / 500.0, max_relative = 1e-12);
        assert_relative_eq!(r.drive.norm(), 2.0 * 2.0 * 3.0 / 500.0, max_relative = 1e-12);
        // Detuned: check against direct substitution.
        let (g, gl, dl, om) = (1.5, 80.0, 12.0, 2.0);
        let r = eliminate_resonator(g, gl, dl, om).unwrap();
        let den = Complex64::new(dl, -0.5 * gl);
        let self_energy = -g * g / den;
        assert_relative_eq!(r.shift, self_energy.re, max_relative = 1e-12);
        assert_relative_eq!(-0.5 * r.damping, self_energy.im, max_relative = 1e-12);
        let drive = 2.0 * (-g * om / (2.0 * den));
        assert!((r.drive - drive).norm() < 1e-14);
    }

    #[test]
    fn count_rates() {
        let patch =
            TransducerPipeline { omega_thz_rabi: 0.2, gain: 1.0, susceptibility: 1e-3, gamma0: 0.04, p_click: 0.05 };
        assert_relative_eq!(transducer_count_rate(&patch).unwrap(), 50.0, max_relative = 1e-12);
        let ring = TransducerPipeline { omega_thz_rabi: 0.002, ..patch };
        assert_relative_eq!(transducer_count_rate(&ring).unwrap(), 0.005, max_relative = 1e-12);
        let off = TransducerPipeline { omega_thz_rabi: 0.0, ..patch };
        assert_eq!(transducer_count_rate(&off).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn intensity_and_field_routes_agree(i in 0.0f64..1e6, xi in 0.0f64..1.0) {
            let direct = rabi_from_intensity(i, xi).unwrap();
            let via_field = rabi_from_field(field_from_intensity(i).unwrap(), xi).unwrap();
            prop_assert!((direct - via_field).abs() <= 1e-9 * direct.abs().max(1e-300));
        }

        #[test]
        fn gain_is_monotone(q in 1.0f64..50.0, s in 1.0f64..500.0, z in 10.0f64..400.0, d in 0.1f64..10.0) {
            let g = |q: f64, s: f64, z: f64, d: f64| capacitive_gain(&MetamaterialDesign::from_impedance(q, s, d, z, 5.0).unwrap()).unwrap();
            let base = g(q, s, z, d);
            prop_assert!(g(q * 1.1, s, z, d) > base);
            prop_assert!(g(q, s * 1.1, z, d) > base);
            prop_assert!(g(q, s, z * 1.1, d) > base);
            prop_assert!(g(q, s, z, d * 1.1) < base);
        }
    }
}

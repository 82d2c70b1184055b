//! Closed-form saturation curves, incoherent pumping, transducer figures of
//! merit and the mean-field steady state of the Stokes-driven molecule.
//!
//! Rates and frequencies are `ν = ω/2π` in GHz, as in [`ModelParams`].
//! Every formula here is a ratio of rates, so no factor of `2π` appears.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelParams, TWO_PI};
use crate::observables::{rate_from_number, FluorescenceRate};
use crate::ode::{DormandPrince, Workspace};

type C = Complex64;

/// Two-level saturation under a resonant ZPL drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonantSaturation {
    /// `n_zpl = (4Δ₀² + γ₀²) / (2Ω²)`; infinite for `Ω = 0`.
    pub n_zpl: f64,
    /// `⟨σ†σ⟩ = ½ / (1 + n_zpl)`.
    pub population: f64,
}

impl ResonantSaturation {
    /// Detected Stokes-filtered rate `p_click γ₀ η² ⟨σ†σ⟩`.
    pub fn stokes_rate(&self, eta: f64, gamma0: f64, p_click: f64) -> FluorescenceRate {
        rate_from_number(eta * eta * self.population, gamma0, p_click)
    }
}

pub fn resonant_saturation(omega_zpl_rabi: f64, delta0: f64, gamma0: f64) -> Result<ResonantSaturation> {
    if !(gamma0 > 0.0) {
        return Err(Error::invalid("gamma0", "must be positive"));
    }
    if omega_zpl_rabi == 0.0 {
        return Ok(ResonantSaturation { n_zpl: f64::INFINITY, population: 0.0 });
    }
    let n_zpl = (4.0 * delta0 * delta0 + gamma0 * gamma0) / (2.0 * omega_zpl_rabi * omega_zpl_rabi);
    Ok(ResonantSaturation { n_zpl, population: 0.5 / (1.0 + n_zpl) })
}

/// `Γ₊ = (g_AS²/γ_v) · γ_v² / (4Δ₀² + γ_v²)`.
pub fn incoherent_pump_rate(g_as: f64, delta0: f64, gamma_v: f64) -> Result<f64> {
    if !(gamma_v > 0.0) {
        return Err(Error::invalid("gamma_v", "must be positive"));
    }
    Ok(g_as * g_as / gamma_v * gamma_v * gamma_v / (4.0 * delta0 * delta0 + gamma_v * gamma_v))
}

/// `Γ₊ / (Γ₊ + γ₀)`.
pub fn incoherent_population(rate: f64, gamma0: f64) -> f64 {
    if rate + gamma0 == 0.0 {
        0.0
    } else {
        rate / (rate + gamma0)
    }
}

/// Stokes cooperativity and saturation number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StokesFigures {
    /// `C_S = g_S² / (γ_v γ₀)`.
    pub cooperativity: f64,
    /// `n_S = (4Δ₀² + γ₀²) / (2g_S²)`; infinite for `g_S = 0`.
    pub saturation_number: f64,
}

pub fn stokes_figures(g_s: f64, delta0: f64, gamma0: f64, gamma_v: f64) -> Result<StokesFigures> {
    if !(gamma0 > 0.0) || !(gamma_v > 0.0) {
        return Err(Error::invalid("gamma", "rates must be positive"));
    }
    let g2 = g_s * g_s;
    let saturation_number =
        if g2 == 0.0 { f64::INFINITY } else { (4.0 * delta0 * delta0 + gamma0 * gamma0) / (2.0 * g2) };
    Ok(StokesFigures { cooperativity: g2 / (gamma_v * gamma0), saturation_number })
}

/// Linearized resonant susceptibility `χ = 2 n_S C_S² / (1 + C_S)²`.
/// Assumes a resonant THz drive (`Δ_v = 0`).
pub fn transducer_susceptibility(fig: &StokesFigures) -> f64 {
    let c = fig.cooperativity;
    if c == 0.0 {
        return 0.0;
    }
    2.0 * fig.saturation_number * c * c / ((1.0 + c) * (1.0 + c))
}

/// `Γ_trans/2π = χ Ω_THz² / γ₀` in GHz.
pub fn transduction_rate(chi: f64, omega_thz_rabi: f64, gamma0: f64) -> f64 {
    chi * omega_thz_rabi * omega_thz_rabi / gamma0
}

/// Mean-field steady state. `b` is `⟨b⟩`, `b_ss = ⟨b⟩ + b_zpl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub b: C,
    pub sigma: C,
    pub s_z: f64,
    pub b_zpl: C,
    pub b_in: C,
    pub b_ss: C,
    pub population: f64,
    /// `|b_ss|²` of every physical root of the steady-state cubic, ascending.
    /// More than one entry signals bistability; the state above is the lowest.
    pub branches: Vec<f64>,
    pub residual: f64,
}

impl MeanFieldState {
    pub fn is_bistable(&self) -> bool {
        self.branches.len() > 1
    }
}

/// Solves `[a + c/(1 + |b_ss|²/n_S)] b_ss = b_in` with
/// `a = 1 + 2iΔ_v/γ_v` and `c = C_S/(1 + 2iΔ₀/γ₀)` through the equivalent
/// cubic in `y = 1 + |b_ss|²/n_S`, and returns the low-amplitude branch.
pub fn meanfield_steady_state(params: &ModelParams) -> Result<MeanFieldState> {
    let p = params;
    if !(p.gamma0 > 0.0) || !(p.gamma_v > 0.0) {
        return Err(Error::invalid("gamma", "rates must be positive"));
    }
    let a = C::new(1.0, 2.0 * p.delta_v / p.gamma_v);
    if p.g_s == 0.0 {
        return Ok(uncoupled_state(p, a));
    }
    let fig = stokes_figures(p.g_s, p.delta0, p.gamma0, p.gamma_v)?;
    let n_s = fig.saturation_number;
    let c = fig.cooperativity / C::new(1.0, 2.0 * p.delta0 / p.gamma0);
    let b_zpl = C::new(p.omega_zpl_rabi / p.g_s, 0.0);
    let b_in = C::new(0.0, -p.omega_thz_rabi / p.gamma_v) + a * b_zpl;
    let bin2 = b_in.norm_sqr();

    // n(y − 1)|a y + c|² − |b_in|² y² = 0, divided by n.
    let re = (a * c.conj()).re;
    let a2 = a.norm_sqr();
    let c2 = c.norm_sqr();
    let coeffs = [a2, 2.0 * re - a2 - bin2 / n_s, c2 - 2.0 * re, -c2];
    let mut ys: Vec<f64> = real_cubic_roots(coeffs).into_iter().filter(|y| *y >= 1.0 - 1e-12).collect();
    ys.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ys.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * y.abs().max(1.0));
    let y = *ys.first().ok_or(Error::NonConvergence { iterations: 0, residual: f64::NAN })?;
    let y = y.max(1.0);
    let b_ss = b_in / (a + c / y);
    let x = b_ss.norm_sqr() / n_s;
    let residual = ((a + c / (1.0 + x)) * b_ss - b_in).norm();
    let s_z = -0.5 / (1.0 + x);
    let sigma = p.g_s * s_z * b_ss / C::new(p.delta0, -0.5 * p.gamma0);
    Ok(MeanFieldState {
        b: b_ss - b_zpl,
        sigma,
        s_z,
        b_zpl,
        b_in,
        b_ss,
        population: 0.5 + s_z,
        branches: ys.iter().map(|y| n_s * (y - 1.0).max(0.0)).collect(),
        residual,
    })
}

fn uncoupled_state(p: &ModelParams, a: C) -> MeanFieldState {
    let b = C::new(0.0, -p.omega_thz_rabi / p.gamma_v) / a;
    let sat = resonant_saturation(p.omega_zpl_rabi, p.delta0, p.gamma0).unwrap();
    let s_z = sat.population - 0.5;
    // Two-level Bloch coherence: σ = Ω s_z / (Δ₀ − iγ₀/2).
    let sigma = p.omega_zpl_rabi * s_z / C::new(p.delta0, -0.5 * p.gamma0);
    MeanFieldState {
        b,
        sigma,
        s_z,
        b_zpl: C::new(0.0, 0.0),
        b_in: C::new(0.0, -p.omega_thz_rabi / p.gamma_v),
        b_ss: b,
        population: sat.population,
        branches: vec![b.norm_sqr()],
        residual: 0.0,
    }
}

/// Real roots of `c₀x³ + c₁x² + c₂x + c₃`, polished by Newton steps.
fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let [a, b, cc, d] = c;
    let (b, cc, d) = (b / a, cc / a, d / a);
    // Depressed cubic t³ + pt + q with x = t − b/3.
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    let shift = -b / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    } else if p == 0.0 {
        vec![shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (3.0 * q / (2.0 * p) / r).clamp(-1.0, 1.0).acos();
        (0..3).map(|k| 2.0 * r * ((phi - TWO_PI * k as f64) / 3.0).cos() + shift).collect()
    };
    for x in &mut roots {
        for _ in 0..50 {
            let f = ((*x + b) * *x + cc) * *x + d;
            let df = (3.0 * *x + 2.0 * b) * *x + cc;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            *x -= step;
            if step.abs() <= 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
    }
    roots
}

/// Time-dependent mean-field equations for `(b, σ, s_z)`, integrated from
/// `init` and sampled at `times` (ns).
pub fn meanfield_evolve(params: &ModelParams, init: (C, C, f64), times: &[f64]) -> Result<Vec<(C, C, f64)>> {
    let p = params;
    let w = |x: f64| TWO_PI * x;
    let (dv, d0, g, om_zpl, om_thz) = (w(p.delta_v), w(p.delta0), w(p.g_s), w(p.omega_zpl_rabi), w(p.omega_thz_rabi));
    let (gv, g0) = (w(p.gamma_v), w(p.gamma0));
    let i = C::new(0.0, 1.0);
    let mut rhs = |_t: f64, y: &[C], dy: &mut [C]| {
        let (b, s, sz) = (y[0], y[1], y[2].re);
        dy[0] = -i * (C::new(dv, -0.5 * gv) * b + 0.5 * g * s + 0.5 * om_thz);
        dy[1] = -i * (C::new(d0, -0.5 * g0) * s - sz * (g * b + om_zpl));
        let drive = g * b + om_zpl;
        dy[2] = C::new((i * 0.5 * (s * drive.conj() - s.conj() * drive)).re - 0.5 * g0 - g0 * sz, 0.0);
    };
    let dp = DormandPrince { rtol: 1e-10, atol: 1e-12, ..Default::default() };
    let mut ws = Workspace::new(3);
    let mut y = vec![init.0, init.1, C::new(init.2, 0.0)];
    let mut h = 0.0;
    let mut t = times.first().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(times.len());
    for &tn in times {
        if tn < t {
            return Err(Error::invalid("times", "must be non-decreasing"));
        }
        dp.integrate(&mut rhs, t, &mut y, tn, &mut h, &mut ws)?;
        t = tn;
        out.push((y[0], y[1], y[2].re));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn saturation_points() {
        let s = resonant_saturation(0.04 / 2f64.sqrt(), 0.0, 0.04).unwrap();
        assert_abs_diff_eq!(s.n_zpl, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.population, 0.25, epsilon = 1e-12);
        assert!((resonant_saturation(1e6, 0.0, 0.04).unwrap().population - 0.5).abs() < 1e-9);
        assert_eq!(resonant_saturation(0.0, 0.3, 0.04).unwrap().population, 0.0);
        assert!(resonant_saturation(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pump_rates() {
        assert_abs_diff_eq!(incoherent_pump_rate(1.0, 0.0, 10.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(incoherent_population(0.04, 0.04), 0.5, epsilon = 1e-15);
        assert!(incoherent_pump_rate(1.0, 3.0, 10.0).unwrap() < 0.1);
    }

    #[test]
    fn cooperativity_and_susceptibility() {
        let f = stokes_figures(10.0, 0.0, 0.04, 10.0).unwrap();
        assert_abs_diff_eq!(f.cooperativity, 250.0, epsilon = 1e-9);
        let z = stokes_figures(0.0, 0.0, 0.04, 10.0).unwrap();
        assert_eq!(z.cooperativity, 0.0);
        assert!(z.saturation_number.is_infinite());
        assert_eq!(transducer_susceptibility(&z), 0.0);

        let g = (10.0f64 * 0.04).sqrt();
        let f = stokes_figures(g, 0.0, 0.04, 10.0).unwrap();
        assert_abs_diff_eq!(f.cooperativity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(transducer_susceptibility(&f), 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(transduction_rate(1e-3, 0.1, 0.04), 2.5e-4, epsilon = 1e-15);
    }

    #[test]
    fn susceptibility_peaks_at_unit_cooperativity() {
        let chi =
            |c: f64| transducer_susceptibility(&stokes_figures((c * 10.0 * 0.04f64).sqrt(), 0.0, 0.04, 10.0).unwrap());
        let grid: Vec<f64> = (0..401).map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / 400.0)).collect();
        let vals: Vec<f64> = grid.iter().map(|&c| chi(c)).collect();
        let imax = (0..vals.len()).max_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap()).unwrap();
        assert_abs_diff_eq!(grid[imax], 1.0, epsilon = 1e-9);
        assert!(vals[..imax].windows(2).all(|w| w[1] > w[0]));
        assert!(vals[imax..].windows(2).all(|w| w[1] < w[0]));
        // Closed form (γ₀/γ_v) C/(1+C)².
        for &c in &grid {
            assert_abs_diff_eq!(chi(c), 0.004 * c / ((1.0 + c) * (1.0 + c)), epsilon = 1e-15);
        }
    }

    fn worked_point() -> ModelParams {
        ModelParams { g_s: 10.0, omega_zpl_rabi: 1.0, ..ModelParams::default() }
    }

    #[test]
    fn worked_point_occupation() {
        let st = meanfield_steady_state(&worked_point()).unwrap();
        assert!((st.b.norm_sqr() - 0.0099).abs() < 2e-4, "{}", st.b.norm_sqr());
        assert!(st.residual < 1e-12);
        assert!((-0.5..=0.5).contains(&st.s_z));
    }

    #[test]
    fn zero_drive_is_vacuum() {
        let st = meanfield_steady_state(&ModelParams { g_s: 10.0, ..ModelParams::default() }).unwrap();
        assert_eq!(st.b.norm(), 0.0);
        assert_eq!(st.population, 0.0);
    }

    #[test]
    fn weak_drive_limit() {
        let p = ModelParams { g_s: 1.0, omega_zpl_rabi: 1e-4, omega_thz_rabi: 1e-4, ..ModelParams::default() };
        let st = meanfield_steady_state(&p).unwrap();
        let f = stokes_figures(p.g_s, 0.0, p.gamma0, p.gamma_v).unwrap();
        assert!(st.b_ss.norm_sqr() < 0.01 * f.saturation_number);
        let c = f.cooperativity;
        let want = -c * st.b_zpl / (1.0 + c) - C::new(0.0, p.omega_thz_rabi / p.gamma_v) / (1.0 + c);
        assert!((st.b - want).norm() < 0.01 * want.norm(), "{} vs {want}", st.b);
    }

    #[test]
    fn time_dependent_equations_relax_to_algebraic_state() {
        for p in [
            worked_point(),
            ModelParams {
                g_s: 0.5,
                omega_zpl_rabi: 0.02,
                omega_thz_rabi: 0.3,
                delta0: 0.02,
                delta_v: 1.0,
                ..ModelParams::default()
            },
        ] {
            let st = meanfield_steady_state(&p).unwrap();
            let traj = meanfield_evolve(&p, (C::new(0.0, 0.0), C::new(0.0, 0.0), -0.5), &[0.0, 400.0]).unwrap();
            let (b, s, sz) = traj[1];
            assert!((b - st.b).norm() < 1e-6 * (1.0 + st.b.norm()), "{b} vs {}", st.b);
            assert!((s - st.sigma).norm() < 1e-6, "{s} vs {}", st.sigma);
            assert_abs_diff_eq!(sz, st.s_z, epsilon = 1e-6);
        }
    }

    #[test]
    fn uncoupled_mean_field() {
        let p = ModelParams { omega_zpl_rabi: 0.04, omega_thz_rabi: 0.5, ..ModelParams::default() };
        let st = meanfield_steady_state(&p).unwrap();
        assert_abs_diff_eq!(st.population, resonant_saturation(0.04, 0.0, 0.04).unwrap().population, epsilon = 1e-15);
        let traj = meanfield_evolve(&p, (C::new(0.0, 0.0), C::new(0.0, 0.0), -0.5), &[0.0, 400.0]).unwrap();
        assert!((traj[1].0 - st.b).norm() < 1e-8);
        assert!((traj[1].1 - st.sigma).norm() < 1e-8);
    }

    #[test]
    fn bistable_roots_all_satisfy_the_fixed_point() {
        let p = ModelParams { g_s: 10.0, omega_zpl_rabi: 1.0, ..ModelParams::default() };
        let st = meanfield_steady_state(&p).unwrap();
        assert!(st.is_bistable());
        let f = stokes_figures(p.g_s, p.delta0, p.gamma0, p.gamma_v).unwrap();
        for &u in &st.branches {
            let b_ss = st.b_in / (1.0 + f.cooperativity / (1.0 + u / f.saturation_number));
            assert!((b_ss.norm_sqr() - u).abs() < 1e-9 * u.max(1e-12));
        }
    }

    #[test]
    fn cubic_roots() {
        let mut r = real_cubic_roots([2.0, -12.0, 22.0, -12.0]);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*x, want, epsilon = 1e-12);
        }
        assert_eq!(real_cubic_roots([1.0, 0.0, 1.0, 0.0]).len(), 1);
    }

    proptest! {
        #[test]
        fn cooperativity_times_saturation_is_coupling_free(g in 0.01f64..50.0, d in -5.0f64..5.0) {
            let f = stokes_figures(g, d, 0.04, 10.0).unwrap();
            let want = (4.0 * d * d + 0.0016) / (2.0 * 10.0 * 0.04);
            prop_assert!((f.cooperativity * f.saturation_number / want - 1.0).abs() < 1e-12);
        }

        #[test]
        fn figures_are_scale_invariant(g in 0.01f64..50.0, d in -5.0f64..5.0, s in 0.1f64..10.0) {
            let a = stokes_figures(g, d, 0.04, 10.0).unwrap();
            let b = stokes_figures(s * g, s * d, s * 0.04, s * 10.0).unwrap();
            prop_assert!((a.cooperativity / b.cooperativity - 1.0).abs() < 1e-12);
            prop_assert!((a.saturation_number / b.saturation_number - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mean_field_population_is_bounded(g in 0.1f64..20.0, om in 0.0f64..2.0, thz in 0.0f64..2.0, d in -1.0f64..1.0) {
            let p = ModelParams { g_s: g, omega_zpl_rabi: om, omega_thz_rabi: thz, delta0: d, delta_v: d, ..ModelParams::default() };
            let st = meanfield_steady_state(&p).unwrap();
            prop_assert!((0.0..=0.5).contains(&st.population));
            prop_assert!(st.residual < 1e-9 * (1.0 + st.b_in.norm()));
        }
    }
}

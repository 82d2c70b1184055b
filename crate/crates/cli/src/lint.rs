//! Physics lint for scenarios: regimes where the model or its truncation is
//! likely to mislead.

use serde::Serialize;
use vibronic_core::semiclassical::{meanfield_steady_state, stokes_figures};

use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub rule: &'static str,
    pub message: String,
}

/// Fraction of the cutoff that `⟨n⟩ + 4·spread` may reach before warning.
pub const CUTOFF_FILL: f64 = 0.8;
/// Largest `|b_ss|²/n_S` for which the transducer response counts as linear.
pub const LINEAR_TRANSDUCER_LIMIT: f64 = 0.1;

pub fn lint(s: &Scenario) -> Vec<Warning> {
    let m = &s.model;
    let d = &s.drives;
    let mut out = Vec::new();
    if d.stokes && m.g_s < m.gamma_v {
        out.push(Warning {
            rule: "coherence",
            message: format!(
                "Stokes coupling g_s = {} GHz is below the vibrational linewidth {} GHz; vibronic coherence needs g_s >= gamma_v",
                m.g_s, m.gamma_v
            ),
        });
    }
    let mut g_max: f64 = 0.0;
    if d.stokes {
        g_max = g_max.max(m.g_s.abs());
    }
    if d.anti_stokes {
        g_max = g_max.max(m.g_as.abs());
    }
    if g_max > 0.0 {
        let beta = g_max / m.gamma_v;
        let reach = beta * beta + 4.0 * beta;
        if reach >= CUTOFF_FILL * m.n_cutoff as f64 {
            out.push(Warning {
                rule: "cutoff",
                message: format!(
                    "expected vibrational occupation plus four spreads ({reach:.2}) approaches n_cutoff = {}",
                    m.n_cutoff
                ),
            });
        }
    }
    if d.stokes && d.thz && m.g_s > 0.0 {
        if let (Ok(fig), Ok(mf)) = (stokes_figures(m.g_s, m.delta0, m.gamma0, m.gamma_v), meanfield_steady_state(m)) {
            let ratio = mf.b_ss.norm_sqr() / fig.saturation_number;
            if ratio > LINEAR_TRANSDUCER_LIMIT {
                out.push(Warning {
                    rule: "transducer_linearity",
                    message: format!(
                        "mean-field |b|^2/n_S = {ratio:.3} exceeds {LINEAR_TRANSDUCER_LIMIT}; the linear transducer estimate does not apply"
                    ),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn preset(name: &str) -> Scenario {
        Scenario::from_value(presets::value(presets::find(name).unwrap())).unwrap()
    }

    #[test]
    fn symmetric_rabi_preset_is_clean() {
        assert!(lint(&preset("fig5")).is_empty());
    }

    #[test]
    fn weak_coupling_triggers_coherence() {
        let mut s = preset("fig5");
        s.model.g_s = 1.0;
        let w = lint(&s);
        assert!(w.iter().any(|w| w.rule == "coherence"));
    }

    #[test]
    fn small_cutoff_triggers_cutoff() {
        let mut s = preset("fig5");
        s.model.n_cutoff = 4;
        assert!(lint(&s).iter().any(|w| w.rule == "cutoff"));
    }

    #[test]
    fn strong_thz_drive_triggers_linearity() {
        let mut s = preset("fig8");
        assert!(!lint(&s).iter().any(|w| w.rule == "transducer_linearity"));
        s.model.omega_thz_rabi = 50.0;
        assert!(lint(&s).iter().any(|w| w.rule == "transducer_linearity"));
    }
}

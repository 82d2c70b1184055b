//! Declarative scenario documents.

use serde::{Deserialize, Serialize};
use vibronic_core::design::MetamaterialDesign;
use vibronic_core::model::{DriveSelection, ModelParams};
use vibronic_core::observables::SpectrumMode;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Steady,
    Sweep,
    Traj,
    Wigner,
    Spectrum,
    Design,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Steady => "steady",
            Task::Sweep => "sweep",
            Task::Traj => "traj",
            Task::Wigner => "wigner",
            Task::Spectrum => "spectrum",
            Task::Design => "design",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    /// Dotted paths that must be supplied on top of a preset.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<String>,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub drives: DriveSelection,
    #[serde(default)]
    pub detection: Detection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub p_click: f64,
}

impl Default for Detection {
    fn default() -> Self {
        Self { p_click: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Write `wigner.svg` next to the CSV.
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: None, svg: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Δ₀ and Δ_v moved together.
    Delta0Locked,
    DeltaVOnly,
    GS,
    GAs,
    OmegaThzRabi,
    OmegaZplRabi,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delta0Locked => "delta0_locked",
            SweepAxis::DeltaVOnly => "delta_v_only",
            SweepAxis::GS => "g_s",
            SweepAxis::GAs => "g_as",
            SweepAxis::OmegaThzRabi => "omega_thz_rabi",
            SweepAxis::OmegaZplRabi => "omega_zpl_rabi",
        }
    }

    pub fn apply(self, p: &mut ModelParams, v: f64) {
        match self {
            SweepAxis::Delta0Locked => {
                p.delta0 = v;
                p.delta_v = v;
            }
            SweepAxis::DeltaVOnly => p.delta_v = v,
            SweepAxis::GS => p.g_s = v,
            SweepAxis::GAs => p.g_as = v,
            SweepAxis::OmegaThzRabi => p.omega_thz_rabi = v,
            SweepAxis::OmegaZplRabi => p.omega_zpl_rabi = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Extra parameter stepped outside the sweep axis (one curve per value).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesSpec>,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * s,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * s).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableName {
    Parity,
    NZpl,
    NStokes,
    NAntiStokes,
    Excited,
    Vibration,
    /// `σ + σ†`.
    ZplField,
}

impl ObservableName {
    pub fn label(self) -> &'static str {
        match self {
            ObservableName::Parity => "parity",
            ObservableName::NZpl => "n_zpl",
            ObservableName::NStokes => "n_stokes",
            ObservableName::NAntiStokes => "n_anti_stokes",
            ObservableName::Excited => "excited",
            ObservableName::Vibration => "vibration",
            ObservableName::ZplField => "zpl_field",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    pub observable: ObservableName,
    pub bins: usize,
    /// Sampling time; defaults to the last recorded time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub n_traj: usize,
    pub t_final: f64,
    pub dt_max: f64,
    #[serde(default = "one")]
    pub record_stride: usize,
    pub seed: u64,
    pub observables: Vec<ObservableName>,
    /// Number of individual traces written to `traces.csv`.
    #[serde(default = "one")]
    pub keep_traces: usize,
    #[serde(default)]
    pub histograms: Vec<HistogramSpec>,
    /// Times at which the excited-state projected Wigner function of
    /// trajectory 0 is exported.
    #[serde(default)]
    pub projected_wigner_at: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projected_grid: Option<WignerSpec>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WignerSource {
    /// Reduced vibrational state of the steady state.
    #[default]
    Steady,
    /// Vibrational state of `σ†σ ρ σ†σ`, normalized.
    ExcitedProjected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerSpec {
    pub extent: f64,
    pub points: usize,
    #[serde(default)]
    pub source: WignerSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    #[serde(default)]
    pub modes: Vec<SpectrumMode>,
    /// Build a single mode from the model and read its occupation from the
    /// steady state.
    #[serde(default)]
    pub from_steady: bool,
    /// Vibrational frequency for `from_steady`, GHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_v: Option<f64>,
    /// Offsets `[lo, hi]` from the ZPL, GHz.
    pub span: [f64; 2],
    #[serde(default = "per_line")]
    pub points_per_line: usize,
    #[serde(default = "background")]
    pub background_points: usize,
}

fn per_line() -> usize {
    400
}

fn background() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThzSource {
    /// Radiative field set by an intensity in W/cm².
    FreeSpace { intensity: f64, dipole_length: f64 },
    /// Near field given directly in V/m.
    NearField { field: f64, dipole_length: f64 },
    /// Radiative field compressed by an LC resonator.
    Metamaterial { intensity: f64, dipole_length: f64, resonator: ResonatorSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSpec {
    pub quality_factor: f64,
    /// μm².
    pub cross_section: f64,
    /// μm.
    pub gap: f64,
    /// Ohm.
    pub impedance: f64,
    /// THz.
    pub frequency: f64,
}

impl ResonatorSpec {
    pub fn design(&self) -> vibronic_core::Result<MetamaterialDesign> {
        MetamaterialDesign::from_impedance(
            self.quality_factor,
            self.cross_section,
            self.gap,
            self.impedance,
            self.frequency,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    pub source: ThzSource,
    /// Transducer susceptibility; computed from the model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub susceptibility: Option<f64>,
}

impl Scenario {
    /// Parses TOML; a JSON run manifest is accepted and its `scenario` field used.
    pub fn parse(text: &str, is_json: bool) -> Result<Self, CliError> {
        let value = parse_value(text, is_json)?;
        Self::from_value(value)
    }

    pub fn from_value(value: toml::Value) -> Result<Self, CliError> {
        value.try_into().map_err(|e: toml::de::Error| CliError::Parse(one_line(&e.to_string())))
    }

    /// Schema and cross-field checks for the chosen task.
    pub fn validate(&self, task: Task) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema));
        }
        if let Some(t) = self.task {
            if t != task {
                return bad(format!("scenario declares task `{}` but `{}` was requested", t.name(), task.name()));
            }
        }
        self.model.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.detection.p_click) {
            return bad("detection.p_click must lie in [0, 1]".into());
        }
        let missing = |block: &str| CliError::Validation(format!("task `{}` needs a [{block}] block", task.name()));
        match task {
            Task::Steady => {}
            Task::Sweep => {
                let s = self.sweep.as_ref().ok_or_else(|| missing("sweep"))?;
                if s.points < 2 {
                    return bad("sweep.points must be at least 2".into());
                }
                if !s.start.is_finite() || !s.stop.is_finite() {
                    return bad("sweep range must be finite".into());
                }
                if s.spacing == Spacing::Log && !(s.start > 0.0 && s.stop > 0.0) {
                    return bad("log spacing needs a positive range".into());
                }
                if let Some(series) = &s.series {
                    if series.values.is_empty() {
                        return bad(format!(
                            "sweep.series.values ({}) must list at least one value",
                            series.axis.name()
                        ));
                    }
                    if series.axis == s.axis {
                        return bad("sweep.series.axis must differ from sweep.axis".into());
                    }
                }
            }
            Task::Traj => {
                let t = self.trajectory.as_ref().ok_or_else(|| missing("trajectory"))?;
                if t.n_traj == 0 || t.observables.is_empty() {
                    return bad("trajectory needs n_traj >= 1 and at least one observable".into());
                }
                if !(t.dt_max > 0.0) || !(t.t_final >= 0.0) {
                    return bad("trajectory.dt_max must be positive and t_final non-negative".into());
                }
                for h in &t.histograms {
                    if h.bins < 2 {
                        return bad("histogram bins must be at least 2".into());
                    }
                    if !t.observables.contains(&h.observable) {
                        return bad(format!("histogram observable `{}` is not recorded", h.observable.label()));
                    }
                }
                if !t.projected_wigner_at.is_empty() && t.projected_grid.is_none() {
                    return bad("trajectory.projected_wigner_at needs trajectory.projected_grid".into());
                }
            }
            Task::Wigner => {
                let w = self.wigner.as_ref().ok_or_else(|| missing("wigner"))?;
                check_grid(w)?;
            }
            Task::Spectrum => {
                let s = self.spectrum.as_ref().ok_or_else(|| missing("spectrum"))?;
                if s.modes.is_empty() && !s.from_steady {
                    return bad("spectrum.modes must list at least one mode (or set from_steady)".into());
                }
                if s.from_steady && s.omega_v.is_none() {
                    return bad("spectrum.from_steady needs spectrum.omega_v".into());
                }
                if !(s.span[1] > s.span[0]) {
                    return bad("spectrum.span must be increasing".into());
                }
            }
            Task::Design => {
                let d = self.design.as_ref().ok_or_else(|| missing("design"))?;
                if let ThzSource::Metamaterial { resonator, .. } = &d.source {
                    resonator.design().map_err(|e| CliError::Validation(e.to_string()))?;
                }
            }
        }
        Ok(())
    }
}

fn check_grid(w: &WignerSpec) -> Result<(), CliError> {
    if !(w.extent > 0.0) || w.points < 3 {
        return Err(CliError::Validation("wigner grid needs extent > 0 and at least 3 points".into()));
    }
    Ok(())
}

pub fn parse_value(text: &str, is_json: bool) -> Result<toml::Value, CliError> {
    if is_json {
        let json: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Parse(one_line(&e.to_string())))?;
        let inner =
            json.get("scenario").cloned().ok_or_else(|| CliError::Parse("manifest has no `scenario` field".into()))?;
        serde_json::from_value(inner).map_err(|e| CliError::Parse(one_line(&e.to_string())))
    } else {
        text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| CliError::Parse(one_line(&e.to_string())))
    }
}

/// Recursive table merge; `over` wins on conflicts.
pub fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Dotted paths present in `value`.
pub fn has_path(value: &toml::Value, path: &str) -> bool {
    let mut cur = value;
    for part in path.split('.') {
        match cur.get(part) {
            Some(v) => cur = v,
            None => return false,
        }
    }
    true
}

pub fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sweep_parses() {
        let s = Scenario::parse(
            r#"
schema = 1
[model]
gamma0 = 0.04
gamma_v = 10.0
n_cutoff = 4
[sweep]
axis = "omega_zpl_rabi"
start = 0.01
stop = 1.0
points = 3
spacing = "log"
"#,
            false,
        )
        .unwrap();
        s.validate(Task::Sweep).unwrap();
        let v = s.sweep.unwrap().values();
        assert!((v[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let e = Scenario::parse("schema = 1\n[model]\ngamma0 = 0.04\ngamma_v = 10.0\nn_cutoff = 4\nbogus = 1\n", false);
        assert!(matches!(e, Err(CliError::Parse(_))));
        assert!(matches!(Scenario::parse("schema = ", false), Err(CliError::Parse(_))));
    }

    #[test]
    fn validation_errors() {
        let s = Scenario::parse("schema = 1\n[model]\ngamma0 = 0.04\ngamma_v = 10.0\nn_cutoff = 4\n", false).unwrap();
        assert!(matches!(s.validate(Task::Sweep), Err(CliError::Validation(_))));
        s.validate(Task::Steady).unwrap();
        let mut bad = s.clone();
        bad.model.gamma0 = -1.0;
        assert!(matches!(bad.validate(Task::Steady), Err(CliError::Validation(_))));
    }

    #[test]
    fn merge_overrides_nested_keys() {
        let mut a: toml::Value = toml::from_str("[model]\ng_s = 1.0\ngamma0 = 0.04\n").unwrap();
        let b: toml::Value = toml::from_str("[model]\ng_s = 5.0\n").unwrap();
        merge(&mut a, b);
        assert_eq!(a["model"]["g_s"].as_float(), Some(5.0));
        assert_eq!(a["model"]["gamma0"].as_float(), Some(0.04));
        assert!(has_path(&a, "model.g_s"));
        assert!(!has_path(&a, "model.g_as"));
    }
}

//! Built-in scenarios for the standard driving regimes and design estimates.
//!
//! Values a preset cannot fix on its own are listed under `required` and must
//! be supplied by the user config.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
}

const MOLECULE: &str = r#"
schema = 1
[model]
gamma0 = 0.04
gamma_v = 10.0
eta = 0.3
[detection]
p_click = 0.05
"#;

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig2b",
        summary: "resonant ZPL saturation curve with Stokes detection",
        toml: r#"
task = "sweep"
[model]
n_cutoff = 4
[drives]
zpl = true
[sweep]
axis = "omega_zpl_rabi"
start = 0.001
stop = 10.0
points = 41
spacing = "log"
"#,
    },
    Preset {
        name: "fig2b_incoherent",
        summary: "anti-Stokes (incoherent) pumping saturation curve with ZPL detection",
        toml: r#"
task = "sweep"
[model]
n_cutoff = 8
[drives]
anti_stokes = true
[sweep]
axis = "g_as"
start = 0.01
stop = 10.0
points = 31
spacing = "log"
"#,
    },
    Preset {
        name: "fig3a",
        summary: "Stokes fluorescence vs locked detuning under strong ZPL drive",
        toml: r#"
task = "sweep"
required = ["sweep.series.values"]
[model]
omega_zpl_rabi = 4.0
n_cutoff = 10
[drives]
zpl = true
stokes = true
[sweep]
axis = "delta0_locked"
start = -30.0
stop = 30.0
points = 121
[sweep.series]
axis = "g_s"
"#,
    },
    Preset {
        name: "fig3b",
        summary: "Stokes fluorescence vs locked detuning under weak ZPL drive",
        toml: r#"
task = "sweep"
required = ["sweep.series.values", "model.omega_zpl_rabi"]
[model]
n_cutoff = 10
[drives]
zpl = true
stokes = true
[sweep]
axis = "delta0_locked"
start = -30.0
stop = 30.0
points = 121
[sweep.series]
axis = "g_s"
"#,
    },
    Preset {
        name: "fig3c",
        summary: "Stokes fluorescence vs vibrational detuning under strong ZPL drive",
        toml: r#"
task = "sweep"
required = ["sweep.series.values"]
[model]
omega_zpl_rabi = 4.0
n_cutoff = 10
[drives]
zpl = true
stokes = true
[sweep]
axis = "delta_v_only"
start = -30.0
stop = 30.0
points = 121
[sweep.series]
axis = "g_s"
"#,
    },
    Preset {
        name: "fig3d",
        summary: "Stokes fluorescence vs vibrational detuning under weak ZPL drive",
        toml: r#"
task = "sweep"
required = ["sweep.series.values", "model.omega_zpl_rabi"]
[model]
n_cutoff = 10
[drives]
zpl = true
stokes = true
[sweep]
axis = "delta_v_only"
start = -30.0
stop = 30.0
points = 121
[sweep.series]
axis = "g_s"
"#,
    },
    Preset {
        name: "fig4a",
        summary: "Stokes, ZPL and anti-Stokes fluorescence vs locked detuning under Stokes and anti-Stokes drives",
        toml: r#"
task = "sweep"
required = ["sweep.series.values"]
[model]
g_as = 15.0
n_cutoff = 30
[drives]
stokes = true
anti_stokes = true
[sweep]
axis = "delta0_locked"
start = -40.0
stop = 40.0
points = 81
[sweep.series]
axis = "g_s"
"#,
    },
    Preset {
        name: "fig4b",
        summary: "steady-state vibrational Wigner function under Stokes and anti-Stokes drives",
        toml: r#"
task = "wigner"
required = ["model.g_s"]
[model]
g_as = 15.0
n_cutoff = 50
[drives]
stokes = true
anti_stokes = true
[wigner]
extent = 6.0
points = 121
"#,
    },
    Preset {
        name: "fig5",
        summary: "single-trajectory parity telegraph of the symmetric Rabi model",
        toml: r#"
task = "traj"
[model]
g_s = 20.0
g_as = 20.0
delta_v = 4.0
n_cutoff = 50
[drives]
stokes = true
anti_stokes = true
[trajectory]
n_traj = 1
t_final = 3.0
dt_max = 0.002
seed = 1
observables = ["parity", "n_anti_stokes"]
projected_wigner_at = [2.0]
[trajectory.projected_grid]
extent = 6.0
points = 61
"#,
    },
    Preset {
        name: "fig5b",
        summary: "steady-state vibrational Wigner function of the symmetric Rabi model",
        toml: r#"
task = "wigner"
[model]
g_s = 20.0
g_as = 20.0
delta_v = 4.0
n_cutoff = 50
[drives]
stokes = true
anti_stokes = true
[wigner]
extent = 6.0
points = 121
source = "excited_projected"
"#,
    },
    Preset {
        name: "fig6",
        summary: "ZPL and anti-Stokes photon-number histograms with the anti-Stokes-squared bias",
        toml: r#"
task = "traj"
[model]
g_s = 20.0
g_as = 20.0
g_as2 = 1.5
delta_v = 4.0
n_cutoff = 50
[drives]
stokes = true
anti_stokes = true
anti_stokes2 = true
[trajectory]
n_traj = 1000
t_final = 4.0
dt_max = 0.002
record_stride = 5
seed = 1
observables = ["n_zpl", "n_anti_stokes"]
histograms = [
    { observable = "n_zpl", bins = 30 },
    { observable = "n_anti_stokes", bins = 30 },
]
"#,
    },
    Preset {
        name: "fig7",
        summary: "ZPL field-quadrature telegraph and histogram with the anti-Stokes-squared bias",
        toml: r#"
task = "traj"
[model]
g_s = 20.0
g_as = 20.0
g_as2 = 1.5
delta_v = 4.0
n_cutoff = 50
[drives]
stokes = true
anti_stokes = true
anti_stokes2 = true
[trajectory]
n_traj = 1000
t_final = 4.0
dt_max = 0.002
record_stride = 5
seed = 1
observables = ["zpl_field", "n_zpl"]
histograms = [{ observable = "zpl_field", bins = 40, range = [-1.0, 1.0] }]
"#,
    },
    Preset {
        name: "fig8",
        summary: "transduced emission vs THz Rabi frequency at unit cooperativity",
        toml: r#"
task = "sweep"
[model]
g_s = 0.6324555320336759
n_cutoff = 6
[drives]
stokes = true
thz = true
[sweep]
axis = "omega_thz_rabi"
start = 0.001
stop = 0.01
points = 10
spacing = "log"
"#,
    },
    Preset {
        name: "fig1",
        summary: "multi-mode emission spectrum",
        toml: r#"
task = "spectrum"
required = ["spectrum.modes"]
[model]
n_cutoff = 4
[spectrum]
span = [-6000.0, 6000.0]
"#,
    },
    Preset {
        name: "design_free_space",
        summary: "transducer count rate driven by free-space THz radiation",
        toml: r#"
task = "design"
[model]
n_cutoff = 4
[design]
susceptibility = 0.001
[design.source]
kind = "free_space"
intensity = 100.0
dipole_length = 0.001
"#,
    },
    Preset {
        name: "design_patch",
        summary: "transducer count rate in the near field of a THz patch antenna",
        toml: r#"
task = "design"
[model]
n_cutoff = 4
[design]
susceptibility = 0.001
[design.source]
kind = "near_field"
field = 1.0e6
dipole_length = 0.001
"#,
    },
    Preset {
        name: "design_metamaterial",
        summary: "transducer count rate with an LC metamaterial resonator",
        toml: r#"
task = "design"
[model]
n_cutoff = 4
[design]
susceptibility = 0.001
[design.source]
kind = "metamaterial"
intensity = 100.0
dipole_length = 0.001
[design.source.resonator]
quality_factor = 10.0
cross_section = 90.0
gap = 1.0
impedance = 100.0
frequency = 5.0
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// The preset document merged onto the shared molecule parameters.
pub fn value(preset: &Preset) -> toml::Value {
    let mut base: toml::Value = toml::Value::Table(MOLECULE.parse().expect("molecule block"));
    let own: toml::Value = toml::Value::Table(preset.toml.parse().expect("preset document"));
    crate::scenario::merge(&mut base, own);
    base
}

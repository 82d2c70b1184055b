//! Task execution. Every task returns its artifacts in memory; nothing is
//! written until the whole task has succeeded.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use vibronic_core::design::{
    capacitive_gain, field_from_intensity, rabi_from_field, rabi_from_intensity, transducer_count_rate,
    TransducerPipeline,
};
use vibronic_core::fock::{self, DensityMatrix, HilbertSpec, Operator, PureState};
use vibronic_core::liouville::{
    build_liouvillian, population_leak, standard_channels, steady_state, JumpChannel, SteadyState,
};
use vibronic_core::model::{build_hamiltonian, DriveSelection, ModelParams};
use vibronic_core::observables::{
    self, photon_number_operator, rate_from_number, reduce_vibrational, Branch, GridSpec, SampledSpectrum,
    SpectrumMode, WignerGrid,
};
use vibronic_core::semiclassical::{stokes_figures, transducer_susceptibility, transduction_rate};
use vibronic_core::trajectory::{
    ensemble_average, histogram_at, projected_state, run_trajectories, RecordedObservable, TrajectoryConfig,
    TrajectoryRecord,
};

use crate::scenario::{ObservableName, Scenario, SweepSpec, ThzSource, WignerSource, WignerSpec};
use crate::CliError;

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub struct TaskOutput {
    pub artifacts: Vec<Artifact>,
    pub diagnostics: serde_json::Value,
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(crate::scenario::one_line(&e.to_string()))
}

fn csv_artifact(
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<Artifact, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Artifact { name: name.into(), bytes })
}

fn f(v: f64) -> String {
    format!("{v}")
}

/// Steady-state read-out of one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub population_excited: f64,
    pub n_vib: f64,
    pub n_zpl: f64,
    pub n_stokes: f64,
    pub n_anti_stokes: f64,
    pub gamma_zpl_kcps: f64,
    pub gamma_stokes_kcps: f64,
    pub gamma_anti_stokes_kcps: f64,
    pub residual: f64,
    pub leak: f64,
    pub degenerate: bool,
}

pub fn solve_steady(params: &ModelParams, drives: DriveSelection) -> vibronic_core::Result<(HilbertSpec, SteadyState)> {
    params.validate()?;
    let spec = params.spec()?;
    let h = build_hamiltonian(params, drives)?;
    let lv = build_liouvillian(&h, &standard_channels(params)?)?;
    Ok((spec, steady_state(&lv)?))
}

pub fn evaluate_point(
    params: &ModelParams,
    drives: DriveSelection,
    p_click: f64,
) -> vibronic_core::Result<PointResult> {
    let (spec, ss) = solve_steady(params, drives)?;
    Ok(read_out(params, spec, &ss, p_click))
}

fn read_out(params: &ModelParams, spec: HilbertSpec, ss: &SteadyState, p_click: f64) -> PointResult {
    let rho = &ss.rho;
    let n = |b: Branch| rho.expectation(&photon_number_operator(spec, params.eta, b)).re;
    let (n_zpl, n_stokes, n_anti_stokes) = (n(Branch::Zpl), n(Branch::Stokes), n(Branch::AntiStokes));
    let kcps = |x: f64| rate_from_number(x, params.gamma0, p_click).kcps;
    PointResult {
        population_excited: n_zpl,
        n_vib: rho.expectation(&fock::number(spec)).re,
        n_zpl,
        n_stokes,
        n_anti_stokes,
        gamma_zpl_kcps: kcps(n_zpl),
        gamma_stokes_kcps: kcps(n_stokes),
        gamma_anti_stokes_kcps: kcps(n_anti_stokes),
        residual: ss.residual,
        leak: population_leak(rho, spec),
        degenerate: ss.degenerate,
    }
}

pub fn steady(s: &Scenario) -> Result<TaskOutput, CliError> {
    let (spec, ss) = solve_steady(&s.model, s.drives).map_err(numerical)?;
    let r = read_out(&s.model, spec, &ss, s.detection.p_click);
    let rho = &ss.rho;
    let b = rho.expectation(&fock::annihilation(spec));
    let sig = rho.expectation(&fock::sigma_minus(spec));
    let report = rho.check();
    let rows: Vec<(&str, f64)> = vec![
        ("population_excited", r.population_excited),
        ("n_vib", r.n_vib),
        ("b_re", b.re),
        ("b_im", b.im),
        ("sigma_re", sig.re),
        ("sigma_im", sig.im),
        ("parity", rho.expectation(&fock::parity(spec)).re),
        ("n_zpl", r.n_zpl),
        ("n_stokes", r.n_stokes),
        ("n_anti_stokes", r.n_anti_stokes),
        ("gamma_zpl_kcps", r.gamma_zpl_kcps),
        ("gamma_stokes_kcps", r.gamma_stokes_kcps),
        ("gamma_anti_stokes_kcps", r.gamma_anti_stokes_kcps),
        ("residual", r.residual),
        ("leak", r.leak),
        ("degenerate", if r.degenerate { 1.0 } else { 0.0 }),
        ("trace_error", report.trace_error),
        ("min_eigenvalue", report.min_eigenvalue),
    ];
    let csv = csv_artifact("result.csv", &["quantity", "value"], rows.iter().map(|(k, v)| vec![k.to_string(), f(*v)]))?;
    Ok(TaskOutput {
        artifacts: vec![csv],
        diagnostics: json!({ "residual": r.residual, "leak": r.leak, "degenerate": r.degenerate }),
    })
}

/// One sweep row; `result` carries the failure message for a failed point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub series: Option<f64>,
    pub axis: f64,
    pub result: Result<PointResult, String>,
}

pub const SWEEP_HEADER: &[&str] = &[
    "series",
    "axis",
    "gamma_zpl_kcps",
    "gamma_stokes_kcps",
    "gamma_anti_stokes_kcps",
    "population_excited",
    "n_vib",
    "residual",
    "leak",
    "degenerate",
    "error",
];

/// Runs every point of the sweep (times every series value) in parallel.
pub fn run_sweep(s: &Scenario, spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>, CliError> {
    let axis = spec.values();
    let series: Vec<Option<f64>> = match &spec.series {
        Some(sr) => sr.values.iter().map(|v| Some(*v)).collect(),
        None => vec![None],
    };
    let jobs: Vec<(Option<f64>, f64)> = series.iter().flat_map(|sv| axis.iter().map(move |a| (*sv, *a))).collect();
    let job = || -> Vec<SweepRow> {
        jobs.par_iter()
            .map(|&(sv, a)| {
                let mut p = s.model;
                if let (Some(v), Some(sr)) = (sv, &spec.series) {
                    sr.axis.apply(&mut p, v);
                }
                spec.axis.apply(&mut p, a);
                let result = evaluate_point(&p, s.drives, s.detection.p_click).map_err(|e| e.to_string());
                SweepRow { series: sv, axis: a, result }
            })
            .collect()
    };
    in_pool(workers, job)
}

pub fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(format!("workers: {e}")))?;
    Ok(pool.install(job))
}

pub fn sweep(s: &Scenario, workers: usize) -> Result<TaskOutput, CliError> {
    let spec = s.sweep.as_ref().expect("validated");
    let rows = run_sweep(s, spec, workers)?;
    let failures = rows.iter().filter(|r| r.result.is_err()).count();
    let max_res = rows.iter().filter_map(|r| r.result.as_ref().ok()).map(|r| r.residual).fold(0.0, f64::max);
    let max_leak = rows.iter().filter_map(|r| r.result.as_ref().ok()).map(|r| r.leak).fold(0.0, f64::max);
    let csv_rows = rows.iter().map(|r| {
        let series = r.series.map(f).unwrap_or_default();
        match &r.result {
            Ok(p) => vec![
                series,
                f(r.axis),
                f(p.gamma_zpl_kcps),
                f(p.gamma_stokes_kcps),
                f(p.gamma_anti_stokes_kcps),
                f(p.population_excited),
                f(p.n_vib),
                f(p.residual),
                f(p.leak),
                (p.degenerate as u8).to_string(),
                String::new(),
            ],
            Err(e) => {
                let mut v = vec![series, f(r.axis)];
                v.extend(std::iter::repeat_n("NaN".to_string(), 7));
                v.push(String::new());
                v.push(e.clone());
                v
            }
        }
    });
    let csv = csv_artifact("result.csv", SWEEP_HEADER, csv_rows)?;
    Ok(TaskOutput {
        artifacts: vec![csv],
        diagnostics: json!({
            "axis": spec.axis.name(),
            "points": rows.len(),
            "failed_points": failures,
            "max_residual": max_res,
            "max_leak": max_leak,
        }),
    })
}

pub fn observable(name: ObservableName, spec: HilbertSpec, eta: f64) -> Operator {
    match name {
        ObservableName::Parity => fock::parity(spec),
        ObservableName::NZpl => photon_number_operator(spec, eta, Branch::Zpl),
        ObservableName::NStokes => photon_number_operator(spec, eta, Branch::Stokes),
        ObservableName::NAntiStokes => photon_number_operator(spec, eta, Branch::AntiStokes),
        ObservableName::Excited => fock::excited_projector(spec),
        ObservableName::Vibration => fock::number(spec),
        ObservableName::ZplField => {
            let s = fock::sigma_minus(spec);
            s.add(&s.adjoint()).expect("same dimension")
        }
    }
}

fn grid(w: &WignerSpec) -> GridSpec {
    GridSpec::symmetric(w.extent, w.points)
}

fn wigner_diagnostics(w: &WignerGrid) -> serde_json::Value {
    let maxima: Vec<[f64; 3]> = w.local_maxima(0.05).into_iter().map(|(q, p, v)| [q, p, v]).collect();
    json!({
        "convention": w.convention,
        "integral": w.integral(),
        "min": w.min(),
        "max_abs": w.max_abs(),
        "local_maxima": maxima,
        "point_reflection_residual": w.point_reflection_residual().ok(),
        "boundary_warning": w.boundary_warning,
    })
}

/// Trajectories of a scenario with a `[trajectory]` block, started in `|g,0⟩`.
pub fn trajectory_runs(
    s: &Scenario,
    workers: usize,
) -> Result<(HilbertSpec, Vec<JumpChannel>, Vec<TrajectoryRecord>), CliError> {
    let t = s.trajectory.as_ref().expect("validated");
    let spec = s.model.spec().map_err(numerical)?;
    let h = build_hamiltonian(&s.model, s.drives).map_err(numerical)?;
    let channels = standard_channels(&s.model).map_err(numerical)?;
    let mut cfg = TrajectoryConfig::new(t.n_traj, t.t_final, t.dt_max, t.seed);
    cfg.record_stride = t.record_stride;
    cfg.workers = workers;
    cfg.snapshot_times = t.projected_wigner_at.clone();
    cfg.observables =
        t.observables.iter().map(|&o| RecordedObservable::new(o.label(), observable(o, spec, s.model.eta))).collect();
    cfg.validate(spec.dim()).map_err(|e| CliError::Validation(e.to_string()))?;
    let psi0 = PureState::basis(spec.dim(), spec.index(0, 0));
    let records = run_trajectories(&h, &channels, &psi0, &cfg).map_err(numerical)?;
    Ok((spec, channels, records))
}

pub fn traj(s: &Scenario, workers: usize) -> Result<TaskOutput, CliError> {
    let t = s.trajectory.as_ref().expect("validated");
    let (spec, channels, records) = trajectory_runs(s, workers)?;
    let labels: Vec<&str> = t.observables.iter().map(|o| o.label()).collect();
    let averages: Vec<_> = (0..labels.len())
        .map(|k| ensemble_average(&records, k))
        .collect::<vibronic_core::Result<_>>()
        .map_err(numerical)?;
    let mut header = vec!["time".to_string()];
    for l in &labels {
        header.push(format!("{l}_mean"));
        header.push(format!("{l}_stderr"));
    }
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let times = &averages[0].times;
    let result = csv_artifact(
        "result.csv",
        &header_ref,
        (0..times.len()).map(|i| {
            let mut row = vec![f(times[i])];
            for a in &averages {
                row.push(f(a.mean[i]));
                row.push(f(a.stderr[i]));
            }
            row
        }),
    )?;

    let kept = &records[..t.keep_traces.min(records.len())];
    let mut trace_header = vec!["trajectory", "time"];
    trace_header.extend(labels.iter().copied());
    let traces = csv_artifact(
        "traces.csv",
        &trace_header,
        kept.iter().flat_map(|r| {
            (0..r.times.len()).map(move |i| {
                let mut row = vec![r.index.to_string(), f(r.times[i])];
                row.extend(r.values.row(i).iter().map(|v| f(*v)));
                row
            })
        }),
    )?;
    let jumps = csv_artifact(
        "jumps.csv",
        &["trajectory", "time", "channel", "kind"],
        kept.iter().flat_map(|r| {
            r.jumps.iter().map(|j| {
                let kind =
                    serde_json::to_value(channels[j.channel].kind).ok().and_then(|v| v.as_str().map(String::from));
                vec![r.index.to_string(), f(j.time), j.channel.to_string(), kind.unwrap_or_default()]
            })
        }),
    )?;
    let mut artifacts = vec![result, traces, jumps];

    let mut hist_diag = Vec::new();
    if !t.histograms.is_empty() {
        let mut rows = Vec::new();
        for hs in &t.histograms {
            let k = t.observables.iter().position(|o| *o == hs.observable).expect("validated");
            let at = hs.time.unwrap_or(*times.last().unwrap_or(&0.0));
            let hist = histogram_at(&records, k, hs.observable.label(), at, hs.bins, hs.range.map(|r| (r[0], r[1])))
                .map_err(numerical)?;
            for (i, c) in hist.counts.iter().enumerate() {
                rows.push(vec![
                    hist.label.clone(),
                    f(hist.sample_time),
                    f(hist.edges[i]),
                    f(hist.edges[i + 1]),
                    c.to_string(),
                ]);
            }
            hist_diag.push(json!({
                "observable": hist.label,
                "time": hist.sample_time,
                "bimodal": hist.is_bimodal(0.5, 0.05),
            }));
        }
        artifacts.push(csv_artifact("histograms.csv", &["observable", "time", "bin_lo", "bin_hi", "count"], rows)?);
    }

    if let (Some(g), Some(first)) = (&t.projected_grid, records.first()) {
        for (k, (_, psi)) in first.snapshots.iter().enumerate() {
            let proj = projected_state(spec, psi).map_err(numerical)?;
            if let Some(rho) = proj.normalized {
                let rho_v = reduce_vibrational(&rho, spec).map_err(numerical)?;
                let w = observables::wigner(&rho_v, &grid(g)).map_err(numerical)?;
                artifacts.push(Artifact { name: format!("projected_wigner_{k}.csv"), bytes: w.to_csv().into_bytes() });
                if s.output.svg {
                    artifacts.push(Artifact {
                        name: format!("projected_wigner_{k}.svg"),
                        bytes: w.to_svg(4.0).into_bytes(),
                    });
                }
            }
        }
    }

    let jumps_total: usize = records.iter().map(|r| r.jumps.len()).sum();
    Ok(TaskOutput {
        artifacts,
        diagnostics: json!({
            "n_traj": records.len(),
            "seed": t.seed,
            "jumps_total": jumps_total,
            "histograms": hist_diag,
        }),
    })
}

fn excited_projected(rho: &DensityMatrix, spec: HilbertSpec) -> Result<DensityMatrix, CliError> {
    let p = fock::excited_projector(spec).to_dense();
    let m = &p * rho.matrix() * &p;
    let mut out = DensityMatrix::from_matrix(m);
    out.normalize_trace().map_err(numerical)?;
    Ok(out)
}

pub fn wigner(s: &Scenario) -> Result<TaskOutput, CliError> {
    let w = s.wigner.as_ref().expect("validated");
    let (spec, ss) = solve_steady(&s.model, s.drives).map_err(numerical)?;
    let rho = match w.source {
        WignerSource::Steady => ss.rho.clone(),
        WignerSource::ExcitedProjected => excited_projected(&ss.rho, spec)?,
    };
    let rho_v = reduce_vibrational(&rho, spec).map_err(numerical)?;
    let wg = observables::wigner(&rho_v, &grid(w)).map_err(numerical)?;
    let mut artifacts = vec![Artifact { name: "result.csv".into(), bytes: wg.to_csv().into_bytes() }];
    if s.output.svg {
        artifacts.push(Artifact { name: "wigner.svg".into(), bytes: wg.to_svg(4.0).into_bytes() });
    }
    let b = ss.rho.expectation(&fock::annihilation(spec));
    let sig = ss.rho.expectation(&fock::sigma_minus(spec));
    let mut diag = wigner_diagnostics(&wg);
    diag["steady_residual"] = json!(ss.residual);
    diag["leak"] = json!(population_leak(&ss.rho, spec));
    diag["mean_b_abs"] = json!(b.norm());
    diag["mean_sigma_abs"] = json!(sig.norm());
    Ok(TaskOutput { artifacts, diagnostics: diag })
}

pub fn spectrum(s: &Scenario) -> Result<TaskOutput, CliError> {
    let sp = s.spectrum.as_ref().expect("validated");
    let mut modes: Vec<SpectrumMode> = sp.modes.clone();
    if sp.from_steady {
        let (spec, ss) = solve_steady(&s.model, s.drives).map_err(numerical)?;
        modes.push(SpectrumMode::from_state(
            s.model.eta,
            sp.omega_v.expect("validated"),
            s.model.gamma_v,
            &ss.rho,
            spec,
        ));
    }
    let lines =
        observables::analytic_spectrum(s.model.gamma0, &modes).map_err(|e| CliError::Validation(e.to_string()))?;
    let offsets = observables::spectrum_grid(&lines, sp.span[0], sp.span[1], sp.points_per_line, sp.background_points);
    let sampled = SampledSpectrum::sample(&lines, offsets);
    let line_rows = lines.iter().map(|l| {
        let kind = serde_json::to_value(l.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        vec![kind, l.mode.map(|m| m.to_string()).unwrap_or_default(), f(l.center), f(l.fwhm), f(l.weight)]
    });
    let result = csv_artifact("result.csv", &["kind", "mode", "center_ghz", "fwhm_ghz", "weight"], line_rows)?;
    let spectrum = Artifact { name: "spectrum.csv".into(), bytes: sampled.to_csv().into_bytes() };
    Ok(TaskOutput {
        artifacts: vec![result, spectrum],
        diagnostics: json!({ "lines": lines.len(), "samples": sampled.offsets.len() }),
    })
}

pub fn design(s: &Scenario) -> Result<TaskOutput, CliError> {
    let d = s.design.as_ref().expect("validated");
    let m = &s.model;
    let chi = match d.susceptibility {
        Some(c) => c,
        None => transducer_susceptibility(&stokes_figures(m.g_s, m.delta0, m.gamma0, m.gamma_v).map_err(numerical)?),
    };
    let mut rows: Vec<(String, f64, &str)> = Vec::new();
    let (bare, gain) = match &d.source {
        ThzSource::FreeSpace { intensity, dipole_length } => {
            rows.push(("field".into(), field_from_intensity(*intensity).map_err(numerical)?, "V/m"));
            (rabi_from_intensity(*intensity, *dipole_length).map_err(numerical)?, 1.0)
        }
        ThzSource::NearField { field, dipole_length } => {
            rows.push(("field".into(), *field, "V/m"));
            (rabi_from_field(*field, *dipole_length).map_err(numerical)?, 1.0)
        }
        ThzSource::Metamaterial { intensity, dipole_length, resonator } => {
            let des = resonator.design().map_err(|e| CliError::Validation(e.to_string()))?;
            rows.push(("field".into(), field_from_intensity(*intensity).map_err(numerical)?, "V/m"));
            rows.push(("capacitance".into(), des.capacitance, "aF"));
            rows.push(("impedance".into(), des.impedance, "Ohm"));
            rows.push(("lc_linewidth".into(), des.linewidth(), "GHz"));
            rows.push(("max_cross_section".into(), des.max_cross_section(), "um^2"));
            (
                rabi_from_intensity(*intensity, *dipole_length).map_err(numerical)?,
                capacitive_gain(&des).map_err(numerical)?,
            )
        }
    };
    let pipeline = TransducerPipeline {
        omega_thz_rabi: bare,
        gain,
        susceptibility: chi,
        gamma0: m.gamma0,
        p_click: s.detection.p_click,
    };
    let count = transducer_count_rate(&pipeline).map_err(numerical)?;
    rows.push(("rabi_bare".into(), bare, "GHz"));
    rows.push(("gain".into(), gain, "1"));
    rows.push(("rabi_effective".into(), bare * gain, "GHz"));
    rows.push(("susceptibility".into(), chi, "1"));
    rows.push(("transduction_rate".into(), transduction_rate(chi, bare * gain, m.gamma0), "GHz"));
    rows.push(("count_rate".into(), count, "kcps"));
    let csv = csv_artifact(
        "result.csv",
        &["quantity", "value", "unit"],
        rows.iter().map(|(k, v, u)| vec![k.clone(), f(*v), u.to_string()]),
    )?;
    Ok(TaskOutput { artifacts: vec![csv], diagnostics: json!({ "count_rate_kcps": count }) })
}

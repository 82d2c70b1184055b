//! Scenario-driven front end for `vibronic-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::json;

pub mod lint;
pub mod presets;
pub mod scenario;
pub mod tasks;

use scenario::{has_path, merge, parse_value, Scenario, Task, SCHEMA_VERSION};
use tasks::TaskOutput;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Parse(String),
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn reason(&self) -> &str {
        match self {
            CliError::Parse(s) | CliError::Validation(s) | CliError::Numerical(s) | CliError::Io(s) => s,
        }
    }

    /// One-line JSON for standard error.
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.kind(), "reason": self.reason() }).to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.reason())
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Action {
    Steady,
    Sweep,
    Traj,
    Wigner,
    Spectrum,
    Design,
    /// Schema check plus physics lint; never writes files.
    Validate,
    /// List built-in presets.
    Presets,
}

impl Action {
    fn task(self) -> Option<Task> {
        match self {
            Action::Steady => Some(Task::Steady),
            Action::Sweep => Some(Task::Sweep),
            Action::Traj => Some(Task::Traj),
            Action::Wigner => Some(Task::Wigner),
            Action::Spectrum => Some(Task::Spectrum),
            Action::Design => Some(Task::Design),
            Action::Validate | Action::Presets => None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vibronic", version, about = "Driven-dissipative vibronic simulations from scenario files")]
pub struct Cli {
    pub action: Action,
    /// Scenario TOML, or a `manifest.json` from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps and trajectories; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Trajectory seed; overrides `trajectory.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Built-in scenario the config is layered on.
    #[arg(long)]
    pub preset: Option<String>,
}

/// A scenario after preset layering, overrides and validation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub task: Task,
    pub preset: Option<String>,
}

fn read_config(path: &Path) -> Result<toml::Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    parse_value(&text, is_json)
}

/// Layers `config` on `preset`, checks required paths, applies overrides and
/// validates against `task` (or the task the document declares).
pub fn resolve(
    config: Option<toml::Value>,
    preset: Option<&str>,
    task: Option<Task>,
    seed: Option<u64>,
) -> Result<Resolved, CliError> {
    let mut value = match preset {
        Some(name) => {
            let p = presets::find(name).ok_or_else(|| CliError::Validation(format!("unknown preset `{name}`")))?;
            presets::value(p)
        }
        None => toml::Value::Table(toml::Table::new()),
    };
    if let Some(c) = config {
        merge(&mut value, c);
    }
    if value.get("schema").is_none() {
        return Err(CliError::Parse("missing `schema` field".into()));
    }
    let mut scenario = Scenario::from_value(value.clone())?;
    let missing: Vec<&str> = scenario.required.iter().map(String::as_str).filter(|p| !has_path(&value, p)).collect();
    if !missing.is_empty() {
        return Err(CliError::Validation(format!("required fields not supplied: {}", missing.join(", "))));
    }
    let task = task
        .or(scenario.task)
        .ok_or_else(|| CliError::Validation("no task given on the command line or in the scenario".into()))?;
    if let (Some(s), Some(t)) = (seed, scenario.trajectory.as_mut()) {
        t.seed = s;
    }
    scenario.validate(task)?;
    scenario.task = Some(task);
    Ok(Resolved { scenario, task, preset: preset.map(String::from) })
}

pub fn execute(r: &Resolved, workers: usize) -> Result<TaskOutput, CliError> {
    let s = &r.scenario;
    match r.task {
        Task::Steady => tasks::steady(s),
        Task::Sweep => tasks::sweep(s, workers),
        Task::Traj => tasks::traj(s, workers),
        Task::Wigner => tasks::wigner(s),
        Task::Spectrum => tasks::spectrum(s),
        Task::Design => tasks::design(s),
    }
}

pub fn manifest(r: &Resolved, workers: usize, out: &TaskOutput) -> Result<serde_json::Value, CliError> {
    let scenario = serde_json::to_value(&r.scenario).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "task": r.task.name(),
        "preset": r.preset,
        "seed": r.scenario.trajectory.as_ref().map(|t| t.seed),
        "workers": workers,
        "outputs": out.artifacts.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
        "diagnostics": out.diagnostics,
        "scenario": scenario,
    }))
}

/// Writes every artifact and the manifest. Files go to temporary names first
/// and are renamed once all of them are on disk.
pub fn write_outputs(dir: &Path, out: &TaskOutput, manifest: &serde_json::Value) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let manifest_bytes = serde_json::to_vec_pretty(manifest).map_err(|e| CliError::Io(e.to_string()))?;
    let files: Vec<(&str, &[u8])> = out
        .artifacts
        .iter()
        .map(|a| (a.name.as_str(), a.bytes.as_slice()))
        .chain(std::iter::once(("manifest.json", manifest_bytes.as_slice())))
        .collect();
    let mut staged = Vec::new();
    for (name, bytes) in &files {
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io(e));
        }
        staged.push(tmp);
    }
    for (tmp, (name, _)) in staged.iter().zip(&files) {
        fs::rename(tmp, dir.join(name)).map_err(io)?;
    }
    Ok(())
}

fn validate_report(cli: &Cli) -> serde_json::Value {
    let config = match cli.config.as_deref().map(read_config).transpose() {
        Ok(c) => c,
        Err(e) => return json!({ "valid": false, "error": e.kind(), "reason": e.reason(), "warnings": [] }),
    };
    match resolve(config, cli.preset.as_deref(), None, cli.seed) {
        Ok(r) => json!({ "valid": true, "task": r.task.name(), "warnings": lint::lint(&r.scenario) }),
        Err(e) => json!({ "valid": false, "error": e.kind(), "reason": e.reason(), "warnings": [] }),
    }
}

/// Runs the parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match cli.action {
        Action::Presets => {
            for p in presets::PRESETS {
                println!("{:<20} {}", p.name, p.summary);
            }
            0
        }
        Action::Validate => {
            println!("{}", validate_report(cli));
            0
        }
        _ => match run_task(cli) {
            Ok(dir) => {
                println!("{}", json!({ "status": "ok", "out": dir.display().to_string() }));
                0
            }
            Err(e) => {
                eprintln!("{}", e.to_json_line());
                e.exit_code()
            }
        },
    }
}

fn run_task(cli: &Cli) -> Result<PathBuf, CliError> {
    let config = cli.config.as_deref().map(read_config).transpose()?;
    if config.is_none() && cli.preset.is_none() {
        return Err(CliError::Parse("give --config, --preset or both".into()));
    }
    let r = resolve(config, cli.preset.as_deref(), cli.action.task(), cli.seed)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| r.scenario.output.dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    log::info!("running {} into {}", r.task.name(), dir.display());
    let out = execute(&r, cli.workers)?;
    let m = manifest(&r, cli.workers, &out)?;
    write_outputs(&dir, &out, &m)?;
    Ok(dir)
}

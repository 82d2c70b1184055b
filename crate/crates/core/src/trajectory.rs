//! Monte-Carlo wavefunction unraveling of the master equation.
//!
//! Each trajectory evolves under `H_eff = H − (i/2) Σ γ_c c†c` until the
//! squared norm drops below a uniform threshold, then applies one jump chosen
//! with probability `∝ γ_c ‖cψ‖²`. Trajectory `k` draws from its own ChaCha
//! stream `(seed, k)`, so results do not depend on the worker count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, HilbertSpec, Operator, PureState};
use crate::liouville::JumpChannel;
use crate::ode::{DormandPrince, Workspace};

type C = Complex64;

/// Observable sampled along every trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedObservable {
    pub label: String,
    pub operator: Operator,
}

impl RecordedObservable {
    pub fn new(label: impl Into<String>, operator: Operator) -> Self {
        Self { label: label.into(), operator }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    /// Final time [ns].
    pub t_final: f64,
    /// Largest integrator step [ns].
    pub dt_max: f64,
    pub seed: u64,
    pub observables: Vec<RecordedObservable>,
    /// Observables are recorded every `record_stride · dt_max`.
    pub record_stride: usize,
    /// Times at which the full state is stored (nearest record time).
    pub snapshot_times: Vec<f64>,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl TrajectoryConfig {
    pub fn new(n_traj: usize, t_final: f64, dt_max: f64, seed: u64) -> Self {
        Self {
            n_traj,
            t_final,
            dt_max,
            seed,
            observables: Vec::new(),
            record_stride: 1,
            snapshot_times: Vec::new(),
            workers: 0,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj", "must be at least 1"));
        }
        if !(self.dt_max > 0.0) || !self.dt_max.is_finite() {
            return Err(Error::invalid("dt_max", "must be positive"));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::invalid("t_final", "must be finite and non-negative"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be at least 1"));
        }
        for obs in &self.observables {
            if obs.operator.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: obs.operator.dim() });
            }
            if !obs.operator.is_hermitian(1e-10) {
                return Err(Error::invalid("observables", format!("`{}` is not Hermitian", obs.label)));
            }
        }
        Ok(())
    }

    /// Shared recording grid `k · stride · dt_max`, `k = 0..=K`.
    pub fn record_times(&self) -> Vec<f64> {
        let dt = self.record_stride as f64 * self.dt_max;
        let k_max = (self.t_final / dt + 1e-9).floor() as usize;
        (0..=k_max).map(|k| k as f64 * dt).collect()
    }
}

/// One quantum jump.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub time: f64,
    /// Index into the channel list passed to [`run_trajectories`].
    pub channel: usize,
    /// Observable values immediately before the jump.
    pub before: Vec<f64>,
    /// Observable values immediately after the jump.
    pub after: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub times: Vec<f64>,
    /// Expectation values, one row per recorded time and one column per
    /// observable.
    pub values: DMatrix<f64>,
    pub jumps: Vec<Jump>,
    pub snapshots: Vec<(f64, PureState)>,
    pub final_state: PureState,
}

impl TrajectoryRecord {
    pub fn trace(&self, observable: usize) -> Vec<f64> {
        self.values.column(observable).iter().copied().collect()
    }

    pub fn jumps_on(&self, channel: usize) -> impl Iterator<Item = &Jump> {
        self.jumps.iter().filter(move |j| j.channel == channel)
    }
}

struct Propagator<'a> {
    /// `−i H_eff`.
    generator: Operator,
    channels: &'a [JumpChannel],
    observables: &'a [RecordedObservable],
    dp: DormandPrince,
    tol_t: f64,
}

fn norm_sqr(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl Propagator<'_> {
    fn expectations(&self, psi: &[C]) -> Vec<f64> {
        let n2 = norm_sqr(psi);
        self.observables.iter().map(|o| o.operator.sandwich(psi).re / n2).collect()
    }

    fn run(&self, psi0: &[C], cfg: &TrajectoryConfig, index: usize) -> Result<TrajectoryRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let times = cfg.record_times();
        let mut values = DMatrix::zeros(times.len(), self.observables.len());
        let mut jumps = Vec::new();
        let mut snapshots = Vec::new();
        let snap_idx: Vec<usize> = cfg.snapshot_times.iter().map(|&ts| nearest(&times, ts)).collect();

        let n = psi0.len();
        let mut psi = psi0.to_vec();
        let mut ws = Workspace::new(n);
        let mut f = |_t: f64, y: &[C], dy: &mut [C]| self.generator.apply(y, dy);
        let mut threshold: f64 = rng.random();
        let mut t = 0.0;
        let mut h = cfg.dt_max;

        for (k, &t_rec) in times.iter().enumerate() {
            while t < t_rec {
                let remaining = t_rec - t;
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                let err = self.dp.try_step(&mut f, t, &psi, step, &mut ws);
                if !(err <= 1.0) {
                    h = step * DormandPrince::step_factor(if err.is_finite() { err } else { 1e10 });
                    if h < self.dp.h_min {
                        return Err(Error::StepUnderflow { t, step: h });
                    }
                    continue;
                }
                let before = norm_sqr(&psi);
                let after = norm_sqr(ws.proposal());
                if !after.is_finite() || after < 1e-12 * before {
                    return Err(Error::NormUnderflow { t });
                }
                h = (step * DormandPrince::step_factor(err)).min(cfg.dt_max);
                if after > threshold {
                    psi.copy_from_slice(ws.proposal());
                    t = if last { t_rec } else { t + step };
                    continue;
                }
                // Threshold crossed inside this step: bisect on the step length.
                let (mut lo, mut hi) = (0.0, step);
                while hi - lo > self.tol_t {
                    let mid = 0.5 * (lo + hi);
                    self.dp.try_step(&mut f, t, &psi, mid, &mut ws);
                    if norm_sqr(ws.proposal()) > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                self.dp.try_step(&mut f, t, &psi, hi, &mut ws);
                psi.copy_from_slice(ws.proposal());
                t += hi;
                let jump = self.jump(&mut psi, t, &mut rng)?;
                jumps.push(jump);
                threshold = rng.random();
            }
            let obs = self.expectations(&psi);
            for (j, v) in obs.into_iter().enumerate() {
                values[(k, j)] = v;
            }
            for (s, &si) in snap_idx.iter().enumerate() {
                if si == k {
                    let state = PureState::normalized(psi.clone())?;
                    snapshots.push((cfg.snapshot_times[s], state));
                }
            }
        }
        Ok(TrajectoryRecord { index, times, values, jumps, snapshots, final_state: PureState::normalized(psi)? })
    }

    fn jump(&self, psi: &mut [C], t: f64, rng: &mut ChaCha8Rng) -> Result<Jump> {
        let before = self.expectations(psi);
        let candidates: Vec<Vec<C>> = self.channels.iter().map(|c| c.operator.apply_vec(psi)).collect();
        let weights: Vec<f64> =
            candidates.iter().zip(self.channels).map(|(v, c)| c.angular_rate() * norm_sqr(v)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NormUnderflow { t });
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut channel = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc && *w > 0.0 {
                channel = i;
                break;
            }
        }
        let new = &candidates[channel];
        let nn = norm_sqr(new).sqrt();
        for (p, v) in psi.iter_mut().zip(new) {
            *p = v / nn;
        }
        Ok(Jump { time: t, channel, before, after: self.expectations(psi) })
    }
}

fn nearest(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().partial_cmp(&(b.1 - t).abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Runs `cfg.n_traj` independent trajectories; records are ordered by index.
pub fn run_trajectories(
    h: &Operator,
    channels: &[JumpChannel],
    psi0: &PureState,
    cfg: &TrajectoryConfig,
) -> Result<Vec<TrajectoryRecord>> {
    let d = h.dim();
    if psi0.dim() != d {
        return Err(Error::DimensionMismatch { left: d, right: psi0.dim() });
    }
    for c in channels {
        if c.operator.dim() != d {
            return Err(Error::DimensionMismatch { left: d, right: c.operator.dim() });
        }
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("psi0", "initial state must be normalized"));
    }
    cfg.validate(d)?;

    let mut h_eff = h.clone();
    for c in channels {
        let cdc = c.operator.adjoint().mul(&c.operator)?;
        h_eff = h_eff.sub(&cdc.scale(C::new(0.0, 0.5 * c.angular_rate())))?;
    }
    let prop = Propagator {
        generator: h_eff.scale(C::new(0.0, -1.0)),
        channels,
        observables: &cfg.observables,
        dp: DormandPrince { rtol: 1e-8, atol: 1e-10, h_max: cfg.dt_max, h_min: 1e-12 },
        tol_t: 1e-3 * cfg.dt_max,
    };
    let psi = psi0.amplitudes();
    let job = || -> Result<Vec<TrajectoryRecord>> {
        (0..cfg.n_traj).into_par_iter().map(|k| prop.run(psi, cfg, k)).collect()
    };
    if cfg.workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?
            .install(job)
    }
}

/// Pointwise ensemble mean and standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

fn check_grid(records: &[TrajectoryRecord]) -> Result<&TrajectoryRecord> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    if records.iter().any(|r| r.times != first.times) {
        return Err(Error::GridMismatch);
    }
    Ok(first)
}

pub fn ensemble_average(records: &[TrajectoryRecord], observable: usize) -> Result<EnsembleAverage> {
    let first = check_grid(records)?;
    if observable >= first.values.ncols() {
        return Err(Error::invalid("observable", "index out of range"));
    }
    let n = records.len() as f64;
    let mut mean = Vec::with_capacity(first.times.len());
    let mut stderr = Vec::with_capacity(first.times.len());
    for k in 0..first.times.len() {
        let m = records.iter().map(|r| r.values[(k, observable)]).sum::<f64>() / n;
        let se = if records.len() > 1 {
            let var = records.iter().map(|r| (r.values[(k, observable)] - m).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        mean.push(m);
        stderr.push(se);
    }
    Ok(EnsembleAverage { times: first.times.clone(), mean, stderr })
}

/// Histogram of single-trajectory expectations at one recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub label: String,
    pub sample_time: f64,
}

impl EnsembleHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Fraction of samples in bins whose centers lie in `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let inside: usize =
            self.centers().iter().zip(&self.counts).filter(|(c, _)| **c >= lo && **c <= hi).map(|(_, n)| n).sum();
        inside as f64 / self.total().max(1) as f64
    }

    /// Two-peak test: some bins `i < k < j` with `counts[k]` below
    /// `valley_ratio · min(counts[i], counts[j])`, where both side peaks hold
    /// at least `min_peak_mass` of the samples.
    pub fn is_bimodal(&self, valley_ratio: f64, min_peak_mass: f64) -> bool {
        self.bimodal_peaks(valley_ratio, min_peak_mass).is_some()
    }

    /// Bin indices `(left peak, valley, right peak)` of the strongest
    /// two-peak structure, if any.
    pub fn bimodal_peaks(&self, valley_ratio: f64, min_peak_mass: f64) -> Option<(usize, usize, usize)> {
        let c = &self.counts;
        let n = c.len();
        let floor = min_peak_mass * self.total() as f64;
        let mut best: Option<((usize, usize, usize), usize)> = None;
        for i in 0..n {
            for j in i + 2..n {
                let side = c[i].min(c[j]);
                if (side as f64) < floor || side == 0 {
                    continue;
                }
                let (k, valley) = (i + 1..j).map(|k| (k, c[k])).min_by_key(|&(_, v)| v).unwrap();
                if (valley as f64) < valley_ratio * side as f64 && best.is_none_or(|(_, s)| side > s) {
                    best = Some(((i, k, j), side));
                }
            }
        }
        best.map(|(idx, _)| idx)
    }
}

/// Histogram at the recorded time nearest `t_sample`. `range` defaults to the
/// sample extent.
pub fn histogram_at(
    records: &[TrajectoryRecord],
    observable: usize,
    label: &str,
    t_sample: f64,
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<EnsembleHistogram> {
    let first = check_grid(records)?;
    if bins == 0 {
        return Err(Error::invalid("bins", "must be at least 1"));
    }
    let (t0, t1) = (first.times[0], *first.times.last().unwrap());
    if t_sample < t0 - 1e-12 || t_sample > t1 + 1e-12 {
        return Err(Error::invalid("t_sample", format!("{t_sample} outside recorded range [{t0}, {t1}]")));
    }
    let k = nearest(&first.times, t_sample);
    let samples: Vec<f64> = records.iter().map(|r| r.values[(k, observable)]).collect();
    let (lo, hi) = range.unwrap_or_else(|| {
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    });
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for s in samples {
        let b = (((s - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Ok(EnsembleHistogram { edges, counts, label: label.to_string(), sample_time: first.times[k] })
}

/// Excited-state projection `σ†σ|ψ⟩⟨ψ|σ†σ`.
#[derive(Debug, Clone)]
pub struct ProjectedState {
    pub unnormalized: DensityMatrix,
    /// `‖σ†σψ‖²`.
    pub weight: f64,
    /// Projection divided by its weight; `None` when the weight vanishes.
    pub normalized: Option<DensityMatrix>,
}

pub fn projected_state(spec: HilbertSpec, psi: &PureState) -> Result<ProjectedState> {
    if psi.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { left: spec.dim(), right: psi.dim() });
    }
    let proj = psi.apply(&fock::excited_projector(spec));
    let v = nalgebra::DVector::from_column_slice(proj.amplitudes());
    let unnormalized = DensityMatrix::from_matrix(&v * v.adjoint());
    let weight = proj.norm_sqr();
    let normalized = if weight > 1e-14 {
        Some(DensityMatrix::from_matrix(unnormalized.matrix() / C::new(weight, 0.0)))
    } else {
        None
    };
    Ok(ProjectedState { unnormalized, weight, normalized })
}

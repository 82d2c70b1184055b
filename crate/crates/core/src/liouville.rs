//! Lindblad superoperator, time propagation and steady-state solver.
//!
//! Density matrices are vectorized by stacking columns, `vec[c·D + r] = ρ[r, c]`,
//! so `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)` and
//!
//! ```text
//! L = −i(I⊗H − Hᵀ⊗I) + Σ_c (γ_c/2)(2 c̄⊗c − I⊗c†c − (c†c)ᵀ⊗I)
//! ```

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, HilbertSpec, Operator};
use crate::model::{ModelParams, TWO_PI};
use crate::ode::{DormandPrince, Workspace};

type C = Complex64;

/// Origin of a jump channel, used for labelling and jump bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// `σ`, radiative decay.
    Electronic,
    /// `b`, vibrational loss.
    Vibrational,
    /// `σ†σ` dephasing.
    OpticalDephasing,
    /// `b†b` dephasing.
    VibrationalDephasing,
    Custom,
}

/// Lindblad channel `(γ/2)(2cρc† − {c†c, ρ})` with `γ = 2π · rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    pub operator: Operator,
    /// Rate `γ/2π` in GHz.
    pub rate: f64,
    pub kind: ChannelKind,
}

impl JumpChannel {
    pub fn new(operator: Operator, rate: f64, kind: ChannelKind) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::invalid("rate", format!("must be finite and non-negative, got {rate}")));
        }
        Ok(Self { operator, rate, kind })
    }

    /// Angular rate in rad/ns.
    pub fn angular_rate(&self) -> f64 {
        TWO_PI * self.rate
    }
}

/// Decay of `σ` and `b` plus any non-zero dephasing channels, in that order.
pub fn standard_channels(params: &ModelParams) -> Result<Vec<JumpChannel>> {
    params.validate()?;
    let spec = params.spec()?;
    let mut out = vec![
        JumpChannel::new(fock::sigma_minus(spec), params.gamma0, ChannelKind::Electronic)?,
        JumpChannel::new(fock::annihilation(spec), params.gamma_v, ChannelKind::Vibrational)?,
    ];
    if params.gamma_phi_opt > 0.0 {
        out.push(JumpChannel::new(fock::excited_projector(spec), params.gamma_phi_opt, ChannelKind::OpticalDephasing)?);
    }
    if params.gamma_phi_v > 0.0 {
        out.push(JumpChannel::new(fock::number(spec), params.gamma_phi_v, ChannelKind::VibrationalDephasing)?);
    }
    Ok(out)
}

/// Vectorized Liouvillian acting on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    hilbert_dim: usize,
    matrix: Operator,
}

impl Superoperator {
    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// `D²`.
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn apply_vec(&self, v: &[C], out: &mut [C]) {
        self.matrix.apply(v, out);
    }

    /// `L[ρ]` as a matrix.
    pub fn apply(&self, rho: &nalgebra::DMatrix<C>) -> nalgebra::DMatrix<C> {
        let d = self.hilbert_dim;
        let v = self.matrix.apply_vec(rho.as_slice());
        nalgebra::DMatrix::from_column_slice(d, d, &v)
    }
}

pub fn build_liouvillian(h: &Operator, channels: &[JumpChannel]) -> Result<Superoperator> {
    let d = h.dim();
    let id = Operator::identity(d);
    let minus_i = C::new(0.0, -1.0);
    let mut l = Operator::kron(&id, h).sub(&Operator::kron(&h.transpose(), &id))?.scale(minus_i);
    for ch in channels {
        if ch.operator.dim() != d {
            return Err(Error::DimensionMismatch { left: d, right: ch.operator.dim() });
        }
        let g = ch.angular_rate();
        if g == 0.0 {
            continue;
        }
        let c = &ch.operator;
        let cdc = c.adjoint().mul(c)?;
        let jump = Operator::kron(&c.conj(), c).scale_real(g);
        let anti = Operator::kron(&id, &cdc).add(&Operator::kron(&cdc.transpose(), &id))?.scale_real(0.5 * g);
        l = l.add(&jump.sub(&anti)?)?;
    }
    Ok(Superoperator { hilbert_dim: d, matrix: l })
}

/// Linear solver used by [`steady_state_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Direct below `D² = 4·10⁴`, iterative above.
    Auto,
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    pub solver: SolverChoice,
    /// Relative residual target for the iterative solver.
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// Trace-distance threshold above which two constrained solutions are
    /// considered distinct.
    pub degeneracy_tol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { solver: SolverChoice::Auto, tol: 1e-10, max_iter: 20_000, restart: 60, degeneracy_tol: 1e-6 }
    }
}

/// Solution of `L vec(ρ) = 0, Tr ρ = 1`.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖L vec(ρ)‖₂` of the returned state.
    pub residual: f64,
    /// Set when a second constrained solve lands on a different state.
    pub degenerate: bool,
    pub iterative: bool,
}

const DIRECT_LIMIT: usize = 40_000;

pub fn steady_state(lv: &Superoperator) -> Result<SteadyState> {
    steady_state_with(lv, &SteadyStateOptions::default())
}

pub fn steady_state_with(lv: &Superoperator, opts: &SteadyStateOptions) -> Result<SteadyState> {
    let d = lv.hilbert_dim;
    let n = lv.dim();
    let iterative = match opts.solver {
        SolverChoice::Auto => n > DIRECT_LIMIT,
        SolverChoice::Direct => false,
        SolverChoice::Iterative => true,
    };
    let solve = |row: usize| -> Result<Vec<C>> {
        if iterative {
            solve_gmres(lv, row, opts)
        } else {
            solve_direct(lv, row)
        }
    };

    let first = finish(d, &solve(0)?)?;
    let second = solve(n - 1).and_then(|x| finish(d, &x));
    let degenerate = match &second {
        Ok(rho2) => first.trace_distance(rho2)? > opts.degeneracy_tol,
        Err(_) => true,
    };
    if degenerate {
        log::warn!("steady state appears degenerate: constrained solves disagree");
    }
    let mut out = vec![C::new(0.0, 0.0); n];
    lv.apply_vec(&first.to_vec(), &mut out);
    let residual = out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(SteadyState { rho: first, residual, degenerate, iterative })
}

fn finish(d: usize, x: &[C]) -> Result<DensityMatrix> {
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    let mut rho = DensityMatrix::from_vec(d, x);
    rho.hermitize();
    rho.normalize_trace().map_err(|_| Error::SingularSystem("solution has zero trace".into()))?;
    Ok(rho)
}

/// Iterates the constrained system: row `row` of `L` replaced by the trace
/// functional, right-hand side `e_row`.
fn constrained_entries(lv: &Superoperator, row: usize) -> impl Iterator<Item = (usize, usize, C)> + '_ {
    let d = lv.hilbert_dim;
    lv.matrix.iter().filter(move |&(r, _, _)| r != row).chain((0..d).map(move |k| (row, k * d + k, C::new(1.0, 0.0))))
}

fn solve_direct(lv: &Superoperator, row: usize) -> Result<Vec<C>> {
    let n = lv.dim();
    let triplets: Vec<Triplet<usize, usize, C>> =
        constrained_entries(lv, row).map(|(r, c, v)| Triplet::new(r, c, v)).collect();
    let a = SparseColMat::<usize, C>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SingularSystem(format!("matrix assembly: {e:?}")))?;
    let lu = a.sp_lu().map_err(|e| Error::SingularSystem(format!("LU factorization: {e:?}")))?;
    let mut rhs = Mat::<C>::zeros(n, 1);
    rhs[(row, 0)] = C::new(1.0, 0.0);
    lu.solve_in_place(rhs.as_mut());
    Ok((0..n).map(|i| rhs[(i, 0)]).collect())
}

/// Restarted GMRES with a Jacobi preconditioner on the constrained system.
fn solve_gmres(lv: &Superoperator, row: usize, opts: &SteadyStateOptions) -> Result<Vec<C>> {
    let n = lv.dim();
    let a = Operator::from_triplets(n, constrained_entries(lv, row));
    let inv_diag: Vec<C> = (0..n)
        .map(|i| {
            let v = a.get(i, i);
            if v.norm() > 0.0 {
                v.inv()
            } else {
                C::new(1.0, 0.0)
            }
        })
        .collect();
    let mut b = vec![C::new(0.0, 0.0); n];
    b[row] = C::new(1.0, 0.0);
    gmres(&a, &inv_diag, &b, opts.tol, opts.restart, opts.max_iter)
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-preconditioned GMRES(m) for `A x = b` with `M⁻¹ = diag(inv_diag)`.
pub(crate) fn gmres(
    a: &Operator,
    inv_diag: &[C],
    b: &[C],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<Vec<C>> {
    let n = b.len();
    let zero = C::new(0.0, 0.0);
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = vec![zero; n];
    let mut r = b.to_vec();
    let mut tmp = vec![zero; n];
    let mut iterations = 0;
    while iterations < max_iter {
        a.apply(&x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let beta = norm(&r);
        if beta / b_norm <= tol {
            return Ok(x);
        }
        let m = restart.min(max_iter - iterations).max(1);
        let mut v: Vec<Vec<C>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|z| z / beta).collect());
        let mut hess = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = C::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            iterations += 1;
            let z: Vec<C> = v[k].iter().zip(inv_diag).map(|(x, d)| x * d).collect();
            let mut w = vec![zero; n];
            a.apply(&z, &mut w);
            for (j, vj) in v.iter().enumerate() {
                let hjk = dot(vj, &w);
                hess[j][k] = hjk;
                for i in 0..n {
                    w[i] -= hjk * vj[i];
                }
            }
            let wn = norm(&w);
            hess[k + 1][k] = C::new(wn, 0.0);
            for j in 0..k {
                let t = cs[j].conj() * hess[j][k] + sn[j].conj() * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let (hk, hk1) = (hess[k][k], hess[k + 1][k]);
            let den = (hk.norm_sqr() + hk1.norm_sqr()).sqrt();
            if den == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = hk / den;
            sn[k] = hk1 / den;
            hess[k][k] = C::new(den, 0.0);
            hess[k + 1][k] = zero;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k].conj() * g[k];
            k_used = k + 1;
            let rel = g[k + 1].norm() / b_norm;
            if wn > 0.0 {
                v.push(w.iter().map(|z| z / wn).collect());
            }
            if rel <= tol || wn == 0.0 {
                break;
            }
        }
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                x[i] += v[j][i] * inv_diag[i] * yj;
            }
        }
    }
    a.apply(&x, &mut tmp);
    let res = norm(&b.iter().zip(&tmp).map(|(p, q)| p - q).collect::<Vec<_>>()) / b_norm;
    if res <= tol {
        return Ok(x);
    }
    Err(Error::NonConvergence { iterations, residual: res })
}

/// Integrates `dρ/dt = L[ρ]` and returns `ρ(t)` for every entry of `t_grid`
/// (starting time is 0 unless the grid starts later).
pub fn propagate(lv: &Superoperator, rho0: &DensityMatrix, t_grid: &[f64]) -> Result<Vec<DensityMatrix>> {
    propagate_with(lv, rho0, t_grid, &DormandPrince { rtol: 1e-10, atol: 1e-12, ..DormandPrince::default() })
}

pub fn propagate_with(
    lv: &Superoperator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    dp: &DormandPrince,
) -> Result<Vec<DensityMatrix>> {
    let d = lv.hilbert_dim;
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { left: d, right: rho0.dim() });
    }
    if t_grid.windows(2).any(|w| !(w[1] >= w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("t_grid", "must be finite and non-decreasing"));
    }
    let mut y = rho0.to_vec();
    let mut ws = Workspace::new(y.len());
    let mut h = 0.0;
    let mut t = t_grid.first().copied().unwrap_or(0.0).min(0.0);
    let mut f = |_t: f64, v: &[C], dv: &mut [C]| lv.apply_vec(v, dv);
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        if target > t {
            dp.integrate(&mut f, t, &mut y, target, &mut h, &mut ws)?;
            t = target;
        }
        let mut rho = DensityMatrix::from_vec(d, &y);
        rho.hermitize();
        out.push(rho);
    }
    Ok(out)
}

/// Population in the two highest retained Fock levels of both electronic
/// branches.
pub fn population_leak(rho: &DensityMatrix, spec: HilbertSpec) -> f64 {
    let n = spec.n_cutoff();
    let m = rho.matrix();
    [n - 2, n - 1].iter().flat_map(|&k| [spec.index(0, k), spec.index(1, k)]).map(|i| m[(i, i)].re).sum()
}

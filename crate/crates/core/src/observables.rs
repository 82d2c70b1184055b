//! Physical read-outs: filtered photon numbers, fluorescence rates, Wigner
//! functions, partial traces and the analytic emission spectrum.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, HilbertSpec, Operator};
use crate::model::TWO_PI;

type C = Complex64;

/// Spectral branch selected by a narrow detection filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Zpl,
    Stokes,
    AntiStokes,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Zpl, Branch::Stokes, Branch::AntiStokes];

    pub fn label(self) -> &'static str {
        match self {
            Branch::Zpl => "zpl",
            Branch::Stokes => "stokes",
            Branch::AntiStokes => "anti_stokes",
        }
    }
}

/// Narrow detection filter around one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterWindow {
    /// Center offset from the ZPL, GHz.
    pub center: f64,
    /// Bandwidth, GHz.
    pub bandwidth: f64,
    pub branch: Branch,
}

impl FilterWindow {
    pub fn new(center: f64, bandwidth: f64, branch: Branch) -> Result<Self> {
        if !(bandwidth > 0.0) {
            return Err(Error::invalid("bandwidth", "must be positive"));
        }
        Ok(Self { center, bandwidth, branch })
    }

    pub fn photon_number(&self, spec: HilbertSpec, eta: f64) -> Operator {
        photon_number_operator(spec, eta, self.branch)
    }
}

/// Filtered photon-number operator: `σ†σ`, `η²σ†σ(1 + b†b)` or `η²σ†σ b†b`.
pub fn photon_number_operator(spec: HilbertSpec, eta: f64, branch: Branch) -> Operator {
    let ee = fock::excited_projector(spec);
    let eta2 = eta * eta;
    match branch {
        Branch::Zpl => ee,
        Branch::Stokes => {
            let one_plus_n = Operator::identity(spec.dim()).add(&fock::number(spec)).unwrap();
            ee.mul(&one_plus_n).unwrap().scale_real(eta2)
        }
        Branch::AntiStokes => ee.mul(&fock::number(spec)).unwrap().scale_real(eta2),
    }
}

/// Detected count rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluorescenceRate {
    /// Counts per ns, `p_click · 2πγ₀ · ⟨N⟩`.
    pub per_ns: f64,
    /// `Γ/2π` in kilo-counts per second.
    pub kcps: f64,
}

/// `Γ = p_click · 2πγ₀ · Tr[ρN]` with `gamma0` given as `γ₀/2π` in GHz.
pub fn fluorescence_rate(rho: &DensityMatrix, op: &Operator, gamma0: f64, p_click: f64) -> Result<FluorescenceRate> {
    if !(0.0..=1.0).contains(&p_click) {
        return Err(Error::invalid("p_click", "must lie in [0, 1]"));
    }
    let n = rho.expectation(op).re;
    Ok(rate_from_number(n, gamma0, p_click))
}

pub fn rate_from_number(n: f64, gamma0: f64, p_click: f64) -> FluorescenceRate {
    let per_ns = p_click * TWO_PI * gamma0 * n;
    FluorescenceRate { per_ns, kcps: per_ns / TWO_PI * 1e6 }
}

/// Vibrational reduced density matrix `Σ_s ⟨s|ρ|s⟩`.
pub fn reduce_vibrational(rho: &DensityMatrix, spec: HilbertSpec) -> Result<DensityMatrix> {
    check_dim(rho, spec)?;
    let n = spec.n_cutoff();
    let m = rho.matrix();
    Ok(DensityMatrix::from_matrix(DMatrix::from_fn(n, n, |a, b| {
        m[(spec.index(0, a), spec.index(0, b))] + m[(spec.index(1, a), spec.index(1, b))]
    })))
}

/// Electronic reduced density matrix (2×2).
pub fn reduce_electronic(rho: &DensityMatrix, spec: HilbertSpec) -> Result<DensityMatrix> {
    check_dim(rho, spec)?;
    let n = spec.n_cutoff();
    let m = rho.matrix();
    Ok(DensityMatrix::from_matrix(DMatrix::from_fn(2, 2, |s, t| {
        (0..n).map(|k| m[(spec.index(s, k), spec.index(t, k))]).sum()
    })))
}

fn check_dim(rho: &DensityMatrix, spec: HilbertSpec) -> Result<()> {
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { left: spec.dim(), right: rho.dim() });
    }
    Ok(())
}

/// Rectangular phase-space grid in dimensionless quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub nq: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    /// Square grid `[-extent, extent]²` with `n` points per axis.
    pub fn symmetric(extent: f64, n: usize) -> Self {
        Self { q_min: -extent, q_max: extent, nq: n, p_min: -extent, p_max: extent, np: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nq < 2 || self.np < 2 {
            return Err(Error::invalid("grid", "needs at least 2 points per axis"));
        }
        if !(self.q_max > self.q_min) || !(self.p_max > self.p_min) {
            return Err(Error::invalid("grid", "axis bounds must be increasing"));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Convention tag carried by every [`WignerGrid`].
pub const WIGNER_CONVENTION: &str = "W(alpha) = (2/pi) Tr[rho D(alpha) P D(-alpha)], alpha = (q + i p)/sqrt(2)";

/// Wigner function sampled on a grid. `values[(i_p, i_q)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub values: DMatrix<f64>,
    pub convention: &'static str,
    /// Set when boundary cells exceed `1e-3 · max|W|`.
    pub boundary_warning: bool,
}

/// Displaced-parity evaluation
/// `W(α) = (2/π) Σ_{mn} ρ_mn (−1)^m ⟨n|D(2α)|m⟩`.
pub fn wigner(rho_v: &DensityMatrix, grid: &GridSpec) -> Result<WignerGrid> {
    grid.validate()?;
    let n = rho_v.dim();
    let rho = rho_v.matrix();
    let q = GridSpec::axis(grid.q_min, grid.q_max, grid.nq);
    let p = GridSpec::axis(grid.p_min, grid.p_max, grid.np);
    let rows: Vec<Vec<f64>> = p
        .par_iter()
        .map(|&pv| {
            q.iter()
                .map(|&qv| {
                    let alpha2 = C::new(qv, pv) * std::f64::consts::SQRT_2;
                    let d = fock::mode_displacement_dense(n, alpha2);
                    let mut s = C::new(0.0, 0.0);
                    for m in 0..n {
                        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                        for k in 0..n {
                            s += rho[(m, k)] * d[(k, m)] * sign;
                        }
                    }
                    2.0 / PI * s.re
                })
                .collect()
        })
        .collect();
    let values = DMatrix::from_fn(p.len(), q.len(), |i, j| rows[i][j]);
    let max = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (np, nq) = values.shape();
    let boundary = (0..nq)
        .flat_map(|j| [(0, j), (np - 1, j)])
        .chain((0..np).flat_map(|i| [(i, 0), (i, nq - 1)]))
        .map(|ix| values[ix].abs())
        .fold(0.0, f64::max);
    let boundary_warning = boundary > 1e-3 * max;
    if boundary_warning {
        log::warn!("Wigner grid too small: boundary value {boundary:.3e} vs max {max:.3e}");
    }
    Ok(WignerGrid { q, p, values, convention: WIGNER_CONVENTION, boundary_warning })
}

impl WignerGrid {
    fn dq(&self) -> f64 {
        self.q[1] - self.q[0]
    }

    fn dp(&self) -> f64 {
        self.p[1] - self.p[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫W d²α` with `d²α = dq dp / 2`; equals `Tr ρ` for states inside the grid.
    pub fn integral(&self) -> f64 {
        let (np, nq) = self.values.shape();
        let mut s = 0.0;
        for i in 0..np {
            let wi = if i == 0 || i == np - 1 { 0.5 } else { 1.0 };
            for j in 0..nq {
                let wj = if j == 0 || j == nq - 1 { 0.5 } else { 1.0 };
                s += wi * wj * self.values[(i, j)];
            }
        }
        0.5 * s * self.dq() * self.dp()
    }

    /// Interior points strictly above all eight neighbours and above
    /// `min_rel · max|W|`, as `(q, p, W)` sorted by decreasing value.
    pub fn local_maxima(&self, min_rel: f64) -> Vec<(f64, f64, f64)> {
        let (np, nq) = self.values.shape();
        let floor = min_rel * self.max_abs();
        let mut out = Vec::new();
        for i in 1..np.saturating_sub(1) {
            for j in 1..nq.saturating_sub(1) {
                let v = self.values[(i, j)];
                if v <= floor {
                    continue;
                }
                let is_max = (-1i64..=1).all(|di| {
                    (-1i64..=1).all(|dj| {
                        (di == 0 && dj == 0) || v > self.values[((i as i64 + di) as usize, (j as i64 + dj) as usize)]
                    })
                });
                if is_max {
                    out.push((self.q[j], self.p[i], v));
                }
            }
        }
        out.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
        out
    }

    /// Weighted centroids of the positive part on either side of the line
    /// through the origin perpendicular to `direction`.
    pub fn split_centroids(&self, direction: (f64, f64)) -> ((f64, f64), (f64, f64)) {
        let mut acc = [(0.0, 0.0, 0.0); 2];
        for (i, &pv) in self.p.iter().enumerate() {
            for (j, &qv) in self.q.iter().enumerate() {
                let w = self.values[(i, j)];
                if w <= 0.0 {
                    continue;
                }
                let side = if qv * direction.0 + pv * direction.1 >= 0.0 { 0 } else { 1 };
                acc[side].0 += w * qv;
                acc[side].1 += w * pv;
                acc[side].2 += w;
            }
        }
        let c = |a: (f64, f64, f64)| if a.2 > 0.0 { (a.0 / a.2, a.1 / a.2) } else { (0.0, 0.0) };
        (c(acc[0]), c(acc[1]))
    }

    /// `max |W(q,p) − W(−q,−p)| / max|W|`; requires axes symmetric about 0.
    pub fn point_reflection_residual(&self) -> Result<f64> {
        let sym = |a: &[f64]| a.iter().zip(a.iter().rev()).all(|(x, y)| (x + y).abs() < 1e-9);
        if !sym(&self.q) || !sym(&self.p) {
            return Err(Error::invalid("grid", "point reflection needs axes symmetric about zero"));
        }
        let (np, nq) = self.values.shape();
        let mut worst: f64 = 0.0;
        for i in 0..np {
            for j in 0..nq {
                worst = worst.max((self.values[(i, j)] - self.values[(np - 1 - i, nq - 1 - j)]).abs());
            }
        }
        Ok(worst / self.max_abs().max(f64::MIN_POSITIVE))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("q,p,w\n");
        for (i, pv) in self.p.iter().enumerate() {
            for (j, qv) in self.q.iter().enumerate() {
                let _ = writeln!(s, "{qv},{pv},{}", self.values[(i, j)]);
            }
        }
        s
    }

    /// Heatmap with a linear diverging map: blue negative, white zero, red
    /// positive. Rows run from high `p` at the top to low `p` at the bottom.
    pub fn to_svg(&self, cell: f64) -> String {
        let (np, nq) = self.values.shape();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let (w, h) = (nq as f64 * cell, np as f64 * cell);
        let mut s = String::new();
        let _ =
            writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        for i in 0..np {
            for j in 0..nq {
                let v = (self.values[(i, j)] / scale).clamp(-1.0, 1.0);
                let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
                let (r, g, b) = if v >= 0.0 { (255, fade(v), fade(v)) } else { (fade(v), fade(v), 255) };
                let y = (np - 1 - i) as f64 * cell;
                let x = j as f64 * cell;
                let _ = writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="#{r:02x}{g:02x}{b:02x}"/>"##
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

/// One vibrational mode entering the multi-mode spectrum. Frequencies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMode {
    pub eta: f64,
    /// Vibrational frequency `ω_k/2π`.
    pub omega: f64,
    /// Vibrational linewidth `γ_k/2π`.
    pub gamma: f64,
    /// Mean occupation.
    #[serde(default)]
    pub n_thermal: f64,
}

impl SpectrumMode {
    /// Mode whose occupation is read from a vibronic state.
    pub fn from_state(eta: f64, omega: f64, gamma: f64, rho: &DensityMatrix, spec: HilbertSpec) -> Self {
        let n_thermal = rho.expectation(&fock::number(spec)).re.max(0.0);
        Self { eta, omega, gamma, n_thermal }
    }
}

/// Lorentzian emission line. All quantities in GHz, centers relative to the ZPL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub center: f64,
    pub fwhm: f64,
    pub weight: f64,
    pub kind: LineKind,
    /// Index of the generating mode; `None` for the ZPL.
    pub mode: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineKind {
    Zpl,
    AntiStokes,
    Stokes,
}

/// Unit-area Lorentzian `(γ/2π) / (x² + γ²/4)`.
pub fn lorentzian(x: f64, fwhm: f64) -> f64 {
    (fwhm / TWO_PI) / (x * x + 0.25 * fwhm * fwhm)
}

/// Lines of the factorized spectrum: one ZPL, then anti-Stokes and Stokes per mode.
pub fn analytic_spectrum(gamma0: f64, modes: &[SpectrumMode]) -> Result<Vec<SpectrumLine>> {
    if !(gamma0 > 0.0) {
        return Err(Error::invalid("gamma0", "must be positive"));
    }
    let mut lines = vec![SpectrumLine { center: 0.0, fwhm: gamma0, weight: 1.0, kind: LineKind::Zpl, mode: None }];
    for (k, m) in modes.iter().enumerate() {
        if !(m.n_thermal >= 0.0) || !(m.gamma >= 0.0) || !(m.eta >= 0.0) {
            return Err(Error::invalid("modes", format!("mode {k} has a negative entry")));
        }
        let eta2 = m.eta * m.eta;
        let fwhm = m.gamma + gamma0;
        lines.push(SpectrumLine {
            center: m.omega,
            fwhm,
            weight: eta2 * m.n_thermal,
            kind: LineKind::AntiStokes,
            mode: Some(k),
        });
        lines.push(SpectrumLine {
            center: -m.omega,
            fwhm,
            weight: eta2 * (1.0 + m.n_thermal),
            kind: LineKind::Stokes,
            mode: Some(k),
        });
    }
    Ok(lines)
}

/// Single-mode shorthand.
pub fn single_mode_spectrum(eta: f64, gamma0: f64, gamma_v: f64, omega_v: f64, n_v: f64) -> Result<Vec<SpectrumLine>> {
    analytic_spectrum(gamma0, &[SpectrumMode { eta, omega: omega_v, gamma: gamma_v, n_thermal: n_v }])
}

pub fn evaluate_spectrum(lines: &[SpectrumLine], offset: f64) -> f64 {
    lines.iter().map(|l| l.weight * lorentzian(offset - l.center, l.fwhm)).sum()
}

/// Frequency grid in `[lo, hi]` that resolves every line: `per_line` points
/// placed at `center + (fwhm/2) tan θ` for uniform `θ`, merged with a uniform
/// background of `background` points.
pub fn spectrum_grid(lines: &[SpectrumLine], lo: f64, hi: f64, per_line: usize, background: usize) -> Vec<f64> {
    let mut pts: Vec<f64> =
        (0..background.max(2)).map(|i| lo + (hi - lo) * i as f64 / (background.max(2) - 1) as f64).collect();
    for l in lines {
        let a = ((lo - l.center) / (0.5 * l.fwhm)).atan();
        let b = ((hi - l.center) / (0.5 * l.fwhm)).atan();
        for i in 0..per_line {
            let th = a + (b - a) * (i as f64 + 0.5) / per_line as f64;
            pts.push(l.center + 0.5 * l.fwhm * th.tan());
        }
    }
    pts.retain(|x| *x >= lo && *x <= hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

/// Sampled spectrum `(offset GHz, intensity)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    pub offsets: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl SampledSpectrum {
    pub fn sample(lines: &[SpectrumLine], offsets: Vec<f64>) -> Self {
        let intensity = offsets.iter().map(|&x| evaluate_spectrum(lines, x)).collect();
        Self { offsets, intensity }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("offset_ghz,intensity\n");
        for (x, y) in self.offsets.iter().zip(&self.intensity) {
            let _ = writeln!(s, "{x},{y}");
        }
        s
    }

    /// Trapezoid integral over `[lo, hi]`, clipping to the sampled points.
    pub fn area(&self, lo: f64, hi: f64) -> f64 {
        let mut s = 0.0;
        for w in 0..self.offsets.len().saturating_sub(1) {
            let (x0, x1) = (self.offsets[w], self.offsets[w + 1]);
            if x0 >= lo && x1 <= hi {
                s += 0.5 * (x1 - x0) * (self.intensity[w] + self.intensity[w + 1]);
            }
        }
        s
    }
}

/// Ratio of the Stokes-window area to the ZPL-window area, an estimate of η².
pub fn franck_condon_extract(
    spectrum: &SampledSpectrum,
    zpl_window: (f64, f64),
    stokes_window: (f64, f64),
) -> Result<f64> {
    for (lo, hi) in [zpl_window, stokes_window] {
        if !(hi > lo) {
            return Err(Error::invalid("window", "bounds must be increasing"));
        }
    }
    if zpl_window.0 < stokes_window.1 && stokes_window.0 < zpl_window.1 {
        return Err(Error::OverlappingWindows);
    }
    let zpl = spectrum.area(zpl_window.0, zpl_window.1);
    if !(zpl > 0.0) {
        return Err(Error::invalid("zpl_window", "contains no spectral weight"));
    }
    Ok(spectrum.area(stokes_window.0, stokes_window.1) / zpl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PureState;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec(n: usize) -> HilbertSpec {
        HilbertSpec::new(n).unwrap()
    }

    #[test]
    fn photon_numbers() {
        let sp = spec(5);
        let e0 = PureState::basis(10, sp.index(1, 0));
        assert_eq!(e0.expectation(&photon_number_operator(sp, 0.3, Branch::AntiStokes)).re, 0.0);
        assert_abs_diff_eq!(e0.expectation(&photon_number_operator(sp, 0.3, Branch::Stokes)).re, 0.09, epsilon = 1e-15);
        let diff = photon_number_operator(sp, 0.3, Branch::Stokes)
            .sub(&photon_number_operator(sp, 0.3, Branch::AntiStokes))
            .unwrap();
        let want = fock::excited_projector(sp).scale_real(0.09);
        assert!(diff.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn saturated_rates() {
        let sp = spec(3);
        let g = PureState::basis(6, 0).to_density();
        for b in Branch::ALL {
            assert_eq!(fluorescence_rate(&g, &photon_number_operator(sp, 0.3, b), 0.04, 0.05).unwrap().per_ns, 0.0);
        }
        // Half-excited saturated state with empty vibration.
        let mut m = DMatrix::zeros(6, 6);
        m[(0, 0)] = C::new(0.5, 0.0);
        m[(3, 3)] = C::new(0.5, 0.0);
        let rho = DensityMatrix::from_matrix(m);
        let zpl = fluorescence_rate(&rho, &photon_number_operator(sp, 0.3, Branch::Zpl), 0.04, 0.05).unwrap();
        assert_abs_diff_eq!(zpl.per_ns, TWO_PI * 0.001, epsilon = 1e-15);
        assert_abs_diff_eq!(zpl.kcps, 1000.0, epsilon = 1e-9);
        let st = fluorescence_rate(&rho, &photon_number_operator(sp, 0.3, Branch::Stokes), 0.04, 0.05).unwrap();
        assert_abs_diff_eq!(st.kcps, 90.0, epsilon = 1e-9);
        assert!(fluorescence_rate(&rho, &Operator::identity(6), 0.04, 1.5).is_err());
    }

    #[test]
    fn partial_traces() {
        let sp = spec(3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![C::new(0.0, 0.0); 6];
        v[sp.index(0, 0)] = C::new(s, 0.0);
        v[sp.index(1, 1)] = C::new(s, 0.0);
        let rho = PureState::from_amplitudes(v).to_density();
        let vib = reduce_vibrational(&rho, sp).unwrap();
        let mut want = DMatrix::zeros(3, 3);
        want[(0, 0)] = C::new(0.5, 0.0);
        want[(1, 1)] = C::new(0.5, 0.0);
        assert!((vib.matrix() - want).iter().all(|z| z.norm() < 1e-15));
        let el = reduce_electronic(&rho, sp).unwrap();
        assert_abs_diff_eq!(el.trace().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vib.trace().re, rho.trace().re, epsilon = 1e-12);

        let prod = fock::coherent_state(sp, C::new(0.4, 0.1)).unwrap().to_density();
        let el = reduce_electronic(&prod, sp).unwrap();
        assert_abs_diff_eq!(el.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_and_odd_cat_wigner() {
        let n = 30;
        let mut vac = DMatrix::zeros(n, n);
        vac[(0, 0)] = C::new(1.0, 0.0);
        let w = wigner(&DensityMatrix::from_matrix(vac), &GridSpec::symmetric(5.0, 41)).unwrap();
        assert_abs_diff_eq!(w.values[(20, 20)], 2.0 / PI, epsilon = 1e-12);
        // Gaussian oracle exp(-(q²+p²)).
        assert_abs_diff_eq!(w.values[(20, 25)], 2.0 / PI * (-(w.q[25].powi(2))).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(w.integral(), 1.0, epsilon = 1e-3);
        assert!(!w.boundary_warning);

        let cat = PureState::from_amplitudes(fock::cat_amplitudes(n, C::new(2.0, 0.0), -1).unwrap()).to_density();
        let w = wigner(&cat, &GridSpec::symmetric(6.0, 61)).unwrap();
        assert_abs_diff_eq!(w.values[(30, 30)], -2.0 / PI, epsilon = 1e-9);
        assert!(w.max_abs() <= 2.0 / PI + 1e-6);
        assert_abs_diff_eq!(w.integral(), 1.0, epsilon = 1e-3);
        assert!(w.point_reflection_residual().unwrap() < 1e-9);
        let peaks = w.local_maxima(0.2);
        assert!(peaks.len() >= 2);
        let (a, b) = w.split_centroids((1.0, 0.0));
        assert!((a.0 - b.0).abs() > 4.0);
    }

    #[test]
    fn boundary_warning_fires() {
        let cat = PureState::from_amplitudes(fock::coherent_amplitudes(30, C::new(2.5, 0.0))).to_density();
        assert!(wigner(&cat, &GridSpec::symmetric(2.0, 11)).unwrap().boundary_warning);
    }

    #[test]
    fn exports() {
        let mut vac = DMatrix::zeros(4, 4);
        vac[(0, 0)] = C::new(1.0, 0.0);
        let w = wigner(&DensityMatrix::from_matrix(vac), &GridSpec::symmetric(1.0, 3)).unwrap();
        let csv = w.to_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("q,p,w\n"));
        let svg = w.to_svg(4.0);
        assert_eq!(svg.matches("<rect").count(), 9);
        assert!(svg.contains("#ffffff") || svg.contains("#ff"));
    }

    #[test]
    fn spectrum_lines() {
        let lines = single_mode_spectrum(0.3, 0.04, 10.0, 1000.0, 0.0).unwrap();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].weight, 0.0);
        assert_abs_diff_eq!(lines[2].weight, 0.09, epsilon = 1e-15);
        let lines = single_mode_spectrum(0.3, 0.04, 10.0, 1000.0, 0.5).unwrap();
        assert_abs_diff_eq!(lines[2].weight / lines[1].weight, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lines[2].fwhm, 10.04, epsilon = 1e-12);
    }

    #[test]
    fn lorentzian_is_normalized() {
        let lines = [SpectrumLine { center: 0.0, fwhm: 2.0, weight: 1.0, kind: LineKind::Zpl, mode: None }];
        let grid = spectrum_grid(&lines, -1e5, 1e5, 4000, 100);
        let s = SampledSpectrum::sample(&lines, grid);
        assert_abs_diff_eq!(s.area(-1e5, 1e5), 1.0 - 2.0 / PI * (1.0f64 / 1e5).atan(), epsilon = 1e-3);
    }

    fn fc_roundtrip(eta: f64) -> f64 {
        let lines = single_mode_spectrum(eta, 0.04, 10.0, 1000.0, 0.0).unwrap();
        let grid = spectrum_grid(&lines, -1500.0, 1500.0, 4000, 2000);
        let s = SampledSpectrum::sample(&lines, grid);
        franck_condon_extract(&s, (-400.0, 400.0), (-1400.0, -600.0)).unwrap()
    }

    #[test]
    fn franck_condon_roundtrip() {
        for eta in [0.1, 0.3] {
            let est = fc_roundtrip(eta);
            assert!((est / (eta * eta) - 1.0).abs() < 0.02, "eta {eta}: {est}");
        }
        // Only the far ZPL tail reaches the Stokes window.
        assert!(fc_roundtrip(0.0) < 1e-4);
        let lines = single_mode_spectrum(0.3, 0.04, 10.0, 1000.0, 0.0).unwrap();
        let s = SampledSpectrum::sample(&lines, vec![-1.0, 0.0, 1.0]);
        assert!(matches!(franck_condon_extract(&s, (-1.0, 1.0), (0.5, 2.0)), Err(Error::OverlappingWindows)));
    }

    #[test]
    fn two_mode_extraction() {
        let modes = [
            SpectrumMode { eta: 0.3, omega: 1000.0, gamma: 10.0, n_thermal: 0.0 },
            SpectrumMode { eta: 0.15, omega: 2500.0, gamma: 8.0, n_thermal: 0.0 },
        ];
        let lines = analytic_spectrum(0.04, &modes).unwrap();
        let grid = spectrum_grid(&lines, -3500.0, 3500.0, 4000, 4000);
        let s = SampledSpectrum::sample(&lines, grid);
        let e1 = franck_condon_extract(&s, (-400.0, 400.0), (-1500.0, -500.0)).unwrap();
        let e2 = franck_condon_extract(&s, (-400.0, 400.0), (-3000.0, -2000.0)).unwrap();
        assert!((e1 / 0.09 - 1.0).abs() < 0.02, "{e1}");
        assert!((e2 / 0.0225 - 1.0).abs() < 0.02, "{e2}");
    }

    proptest! {
        #[test]
        fn stokes_minus_anti_stokes_weight(eta in 0.0f64..1.0, n in 0.0f64..5.0) {
            let lines = single_mode_spectrum(eta, 0.04, 10.0, 500.0, n).unwrap();
            prop_assert!(lines.iter().all(|l| l.weight >= 0.0 && l.fwhm > 0.0));
            prop_assert!((lines[2].weight - lines[1].weight - eta * eta).abs() < 1e-12);
        }
    }
}

//! Adaptive Dormand–Prince 5(4) integrator for complex vector fields.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator tolerances and step bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_min: f64,
}

impl Default for DormandPrince {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-11, h_max: f64::INFINITY, h_min: 1e-14 }
    }
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Workspace {
    k: [Vec<C>; 7],
    tmp: Vec<C>,
    y_new: Vec<C>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        let z = vec![C::new(0.0, 0.0); n];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z.clone(),
            y_new: z,
        }
    }

    /// Result of the last call to [`DormandPrince::try_step`].
    pub fn proposal(&self) -> &[C] {
        &self.y_new
    }
}

impl DormandPrince {
    /// One trial step of size `h` from `(t, y)`. The fifth-order proposal is
    /// left in the workspace; the return value is the scaled RMS error
    /// estimate (accept when `<= 1`).
    pub fn try_step<F>(&self, f: &mut F, t: f64, y: &[C], h: f64, ws: &mut Workspace) -> f64
    where
        F: FnMut(f64, &[C], &mut [C]),
    {
        let n = y.len();
        let Workspace { k, tmp, y_new } = ws;
        let [k1, k2, k3, k4, k5, k6, k7] = k;

        f(t, y, k1);
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h * A21);
        }
        f(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        f(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        f(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        f(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        f(t + h, tmp, k6);
        for i in 0..n {
            y_new[i] = y[i] + (k1[i] * B1 + k3[i] * B3 + k4[i] * B4 + k5[i] * B5 + k6[i] * B6) * h;
        }
        f(t + h, y_new, k7);

        let mut acc = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
            acc += (e.norm() / sc).powi(2);
        }
        if n == 0 {
            0.0
        } else {
            (acc / n as f64).sqrt()
        }
    }

    /// Step-size factor suggested by an error estimate.
    pub fn step_factor(err: f64) -> f64 {
        if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        }
    }

    /// Integrates `y` from `t` to exactly `t_end`. `h` carries the step size
    /// between calls.
    pub fn integrate<F>(
        &self,
        f: &mut F,
        t: f64,
        y: &mut [C],
        t_end: f64,
        h: &mut f64,
        ws: &mut Workspace,
    ) -> Result<()>
    where
        F: FnMut(f64, &[C], &mut [C]),
    {
        let mut t = t;
        if !(*h > 0.0) {
            *h = (t_end - t).abs().min(self.h_max).max(self.h_min);
        }
        while t < t_end {
            let remaining = t_end - t;
            let last = *h >= remaining;
            let step = if last { remaining } else { h.min(self.h_max) };
            let err = self.try_step(f, t, y, step, ws);
            if !err.is_finite() {
                *h = step * 0.2;
            } else if err <= 1.0 {
                y.copy_from_slice(&ws.y_new);
                t = if last { t_end } else { t + step };
                *h = (step * Self::step_factor(err)).min(self.h_max);
                continue;
            } else {
                *h = step * Self::step_factor(err);
            }
            if *h < self.h_min {
                return Err(Error::StepUnderflow { t, step: *h });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let lambda = C::new(-0.7, 3.0);
        let mut f = |_t: f64, y: &[C], dy: &mut [C]| dy[0] = lambda * y[0];
        let mut y = vec![C::new(1.0, 0.0)];
        let mut ws = Workspace::new(1);
        let mut h = 0.0;
        DormandPrince::default().integrate(&mut f, 0.0, &mut y, 2.0, &mut h, &mut ws).unwrap();
        let want = (lambda * 2.0).exp();
        assert!((y[0] - want).norm() < 1e-8, "{} vs {}", y[0], want);
    }

    #[test]
    fn time_dependent_field() {
        let mut f = |t: f64, _y: &[C], dy: &mut [C]| dy[0] = C::new(t.cos(), 0.0);
        let mut y = vec![C::new(0.0, 0.0)];
        let mut ws = Workspace::new(1);
        let mut h = 0.0;
        DormandPrince::default().integrate(&mut f, 0.0, &mut y, 1.3, &mut h, &mut ws).unwrap();
        assert!((y[0].re - 1.3f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn underflow_is_reported() {
        let mut f = |_t: f64, y: &[C], dy: &mut [C]| dy[0] = y[0] * y[0] * 1e3;
        let mut y = vec![C::new(1.0, 0.0)];
        let mut ws = Workspace::new(1);
        let mut h = 0.0;
        let dp = DormandPrince { h_min: 1e-6, ..DormandPrince::default() };
        let res = dp.integrate(&mut f, 0.0, &mut y, 1.0, &mut h, &mut ws);
        assert!(matches!(res, Err(Error::StepUnderflow { .. })));
    }
}

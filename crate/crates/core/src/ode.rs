//! Integrators for complex linear ODEs: an adaptive Dormand-Prince 5(4)
//! scheme with dense stepping onto requested output times, and a fixed-step
//! fourth-order commutator-free Magnus scheme for Schrodinger equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Embedded Runge-Kutta with error control.
    AdaptiveRk,
    /// Fixed-step exponential propagator, Lanczos exponentials.
    ExpmKrylov,
    /// Fixed-step exponential propagator, dense eigendecomposition
    /// (exact for static Hamiltonians).
    ExpmDense,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; for the fixed-step methods, the step.
    pub max_step: f64,
    /// Lanczos subspace size for [`Method::ExpmKrylov`].
    pub krylov_dim: usize,
}

impl IntegratorOptions {
    pub fn pure_default() -> Self {
        Self {
            method: Method::AdaptiveRk,
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            krylov_dim: 30,
        }
    }

    pub fn lindblad_default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            ..Self::pure_default()
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

/// Output times must start at or after `t0` and increase strictly.
pub fn check_time_grid(t0: f64, times: &[f64]) -> Result<()> {
    let mut prev = t0;
    for (k, &t) in times.iter().enumerate() {
        if !t.is_finite() || t < prev || (k > 0 && t == prev) {
            return Err(Error::InvalidTimeGrid(format!(
                "times must be finite and strictly increasing from {t0} (entry {k} = {t})"
            )));
        }
        prev = t;
    }
    Ok(())
}

// Dormand-Prince 5(4) tableau
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn lin(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = ZERO;
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Adaptive Dormand-Prince integration of `y' = f(t, y)` from `t0`, calling
/// `observe(k, t_k, y)` at every output time. Steps land exactly on output
/// times, so results are independent of how the grid is later used.
pub fn dopri5<F, O>(
    mut f: F,
    t0: f64,
    y0: Vec<C64>,
    times: &[f64],
    opts: &IntegratorOptions,
    mut observe: O,
) -> Result<(Vec<C64>, IntegratorStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    opts.validate()?;
    check_time_grid(t0, times)?;
    let n = y0.len();
    let mut y = y0;
    let mut stats = IntegratorStats::default();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![ZERO; n]).collect();
    let mut ytmp = vec![ZERO; n];
    let mut ynew = vec![ZERO; n];
    let mut t = t0;
    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let mut h = initial_step(&y, &k[0], opts);

    for (idx, &t_out) in times.iter().enumerate() {
        while t < t_out {
            let remaining = t_out - t;
            let mut step = h.min(opts.max_step);
            let mut last = false;
            if step >= remaining * (1.0 - 1e-12) {
                step = remaining;
                last = true;
            }
            if step <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: "step size underflow".into(),
                });
            }
            {
                let (k1, rest) = k.split_at_mut(1);
                let k1 = &k1[0];
                lin(&mut ytmp, &y, step, &[(A21, k1)]);
                f(t + C2 * step, &ytmp, &mut rest[0]);
                lin(&mut ytmp, &y, step, &[(A31, k1), (A32, &rest[0])]);
                f(t + C3 * step, &ytmp, &mut rest[1]);
                lin(&mut ytmp, &y, step, &[(A41, k1), (A42, &rest[0]), (A43, &rest[1])]);
                f(t + C4 * step, &ytmp, &mut rest[2]);
                lin(&mut ytmp, &y, step, &[(A51, k1), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])]);
                f(t + C5 * step, &ytmp, &mut rest[3]);
                lin(
                    &mut ytmp,
                    &y,
                    step,
                    &[(A61, k1), (A62, &rest[0]), (A63, &rest[1]), (A64, &rest[2]), (A65, &rest[3])],
                );
                f(t + step, &ytmp, &mut rest[4]);
                lin(
                    &mut ynew,
                    &y,
                    step,
                    &[(B1, k1), (B3, &rest[1]), (B4, &rest[2]), (B5, &rest[3]), (B6, &rest[4])],
                );
                f(t + step, &ynew, &mut rest[5]);
            }
            stats.rhs_evals += 6;
            let mut err2 = 0.0;
            for i in 0..n {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * step;
                let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            let err = (err2 / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: "non-finite error estimate".into(),
                });
            }
            if err <= 1.0 {
                stats.accepted += 1;
                t = if last { t_out } else { t + step };
                std::mem::swap(&mut y, &mut ynew);
                k.swap(0, 6);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a truncated final step says nothing about the natural step size
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
        }
        observe(idx, t_out, &y)?;
    }
    Ok((y, stats))
}

fn initial_step(y: &[C64], dy: &[C64], opts: &IntegratorOptions) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (a, b) in y.iter().zip(dy) {
        let sc = opts.atol + opts.rtol * a.norm();
        d0 += (a.norm() / sc).powi(2);
        d1 += (b.norm() / sc).powi(2);
    }
    let n = y.len().max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(opts.max_step)
}

/// Nodes and weights of the fourth-order commutator-free Magnus step:
/// `U = exp(-i h (a1 H(t1) + a2 H(t2))) exp(-i h (a2 H(t1) + a1 H(t2)))`.
pub struct MagnusCf4;

impl MagnusCf4 {
    pub const C1: f64 = 0.5 - 0.288_675_134_594_812_9; // 1/2 - sqrt(3)/6
    pub const C2: f64 = 0.5 + 0.288_675_134_594_812_9;
    pub const A1: f64 = 0.25 + 0.288_675_134_594_812_9;
    pub const A2: f64 = 0.25 - 0.288_675_134_594_812_9;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillation_is_accurate() {
        // y' = -i w y
        let w = 3.0;
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 0.5).collect();
        let mut out = Vec::new();
        let opts = IntegratorOptions::pure_default();
        let (_, stats) = dopri5(
            |_, y, dy| dy[0] = C64::new(0.0, -w) * y[0],
            0.0,
            vec![C64::new(1.0, 0.0)],
            &times,
            &opts,
            |_, t, y| {
                out.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert!(stats.accepted > 0);
        for (t, y) in out {
            let exact = C64::from_polar(1.0, -w * t);
            assert!((y - exact).norm() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let opts = IntegratorOptions::pure_default();
        let r = dopri5(|_, _, _| {}, 0.0, vec![ZERO], &[1.0, 1.0], &opts, |_, _, _| Ok(()));
        assert!(matches!(r, Err(Error::InvalidTimeGrid(_))));
        let r = dopri5(|_, _, _| {}, 0.0, vec![ZERO], &[-1.0], &opts, |_, _, _| Ok(()));
        assert!(matches!(r, Err(Error::InvalidTimeGrid(_))));
    }

    #[test]
    fn magnus_nodes() {
        assert!((MagnusCf4::A1 + MagnusCf4::A2 - 0.5).abs() < 1e-15);
        assert!((MagnusCf4::C1 - (0.5 - 3f64.sqrt() / 6.0)).abs() < 1e-15);
    }
}

//! Small-fluctuation theory of the induced two-axis twist around a mean spin
//! frozen at `<Sx> = N/2`.
//!
//! With `x = (<Sy^2>, <Sz^2>, <(SySz + SzSy)/2>)`,
//! `dx/dt = (2/3) chi~ [[0, 0, 2N], [0, 0, 2N], [N, N, 0]] x + (gamma_phi N/2, e^{4 r0} Gamma N^2/4, 0)`.
//! The variance along `theta = -pi/4` obeys
//! `dV/dt = -(4/3) N chi~ V + N gamma_phi/4 + N^2 Gamma/4`.

use nalgebra::{Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::itat_r0;
use crate::ode::check_time_grid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizedParams {
    pub n_spins: usize,
    pub g: f64,
    pub kappa: f64,
    pub gamma_phi: f64,
    pub e_beta: f64,
}

impl LinearizedParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 || !(self.g > 0.0) || !(self.e_beta > 0.0) {
            return Err(Error::InvalidParameter("need N > 0, g > 0 and E_beta > 0".into()));
        }
        if !(self.kappa >= 0.0) || !(self.gamma_phi >= 0.0) {
            return Err(Error::InvalidParameter("rates must be non-negative".into()));
        }
        Ok(())
    }

    /// `chi~ = cosh(2 r0) g^2 / E_beta = (3 / (2 sqrt 2)) g^2 / E_beta`.
    pub fn chi_tilde(&self) -> f64 {
        (2.0 * itat_r0()).cosh() * self.g * self.g / self.e_beta
    }

    /// `Gamma = kappa g^2 / E_beta^2`.
    pub fn gamma_big(&self) -> f64 {
        self.kappa * self.g * self.g / (self.e_beta * self.e_beta)
    }

    pub fn cooperativity(&self) -> f64 {
        cooperativity(self.n_spins, self.g, self.kappa, self.gamma_phi)
    }
}

pub fn cooperativity(n_spins: usize, g: f64, kappa: f64, gamma_phi: f64) -> f64 {
    n_spins as f64 * g * g / (kappa * gamma_phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub vyy: f64,
    pub vzz: f64,
    pub vyz: f64,
    /// `V_{-pi/4}`, kept separately since it is far below `vyy` and `vzz`
    /// once the anti-squeezed quadrature has grown.
    pub v_squeezed: f64,
}

impl MomentState {
    /// `<S_theta^2>` for `S_theta = cos(theta) Sy + sin(theta) Sz`.
    pub fn variance_at(&self, theta: f64) -> f64 {
        let (c, s) = (theta.cos(), theta.sin());
        c * c * self.vyy + s * s * self.vzz + 2.0 * s * c * self.vyz
    }

    /// Variance along the squeezed direction `theta = -pi/4`.
    pub fn squeezed_variance(&self) -> f64 {
        self.v_squeezed
    }
}

/// Exact solution of the affine moment equations from the coherent state
/// along +x, at every output time.
///
/// Solved in the coordinates `u = V_{-pi/4}`, `w = V_{+pi/4}`,
/// `q = (vyy - vzz)/2`, where the linear part is diagonal; the affine
/// system is exponentiated as a 4x4 augmented matrix.
pub fn moment_ode_solve(p: &LinearizedParams, times: &[f64]) -> Result<Vec<MomentState>> {
    p.validate()?;
    check_time_grid(0.0, times)?;
    let n = p.n_spins as f64;
    let rate = 4.0 / 3.0 * n * p.chi_tilde();
    let e4r = (4.0 * itat_r0()).exp();
    let b = Vector3::new(p.gamma_phi * n / 2.0, e4r * p.gamma_big() * n * n / 4.0, 0.0);
    // (u, w, q) drives
    let bu = 0.5 * (b[0] + b[1]) - b[2];
    let bw = 0.5 * (b[0] + b[1]) + b[2];
    let bq = 0.5 * (b[0] - b[1]);
    let aug = Matrix4::new(
        -rate, 0.0, 0.0, bu, //
        0.0, rate, 0.0, bw, //
        0.0, 0.0, 0.0, bq, //
        0.0, 0.0, 0.0, 0.0,
    );
    let x0 = Vector4::new(n / 4.0, n / 4.0, 0.0, 1.0);
    Ok(times
        .iter()
        .map(|&t| {
            let y = (aug * t).exp() * x0;
            let (u, w, q) = (y[0], y[1], y[2]);
            let s = 0.5 * (u + w);
            MomentState {
                vyy: s + q,
                vzz: s - q,
                vyz: 0.5 * (w - u),
                v_squeezed: u,
            }
        })
        .collect())
}

/// `V_{-pi/4}(t)` in closed form.
pub fn squeezed_variance(p: &LinearizedParams, t: f64) -> f64 {
    let n = p.n_spins as f64;
    let rate = 4.0 / 3.0 * n * p.chi_tilde();
    let v_inf = steady_state_min_variance(p);
    v_inf + (n / 4.0 - v_inf) * (-rate * t).exp()
}

/// `(3/16) (gamma_phi + N Gamma) / chi~`.
pub fn steady_state_min_variance(p: &LinearizedParams) -> f64 {
    3.0 / 16.0 * (p.gamma_phi + p.n_spins as f64 * p.gamma_big()) / p.chi_tilde()
}

/// `xi^2 = N V / (N/2)^2` at the steady state.
pub fn steady_state_xi2(p: &LinearizedParams) -> f64 {
    4.0 * steady_state_min_variance(p) / p.n_spins as f64
}

/// `E_beta* = sqrt(N) sqrt(g^2 kappa / gamma_phi)`.
pub fn optimal_e_beta(n_spins: usize, g: f64, kappa: f64, gamma_phi: f64) -> Result<f64> {
    if !(gamma_phi > 0.0) {
        return Err(Error::OptimumUnbounded(
            "without single-spin dephasing the squeezing keeps improving as E_beta decreases".into(),
        ));
    }
    Ok((n_spins as f64).sqrt() * (g * g * kappa / gamma_phi).sqrt())
}

/// `sqrt(2 / C)`.
pub fn min_xi2(n_spins: usize, g: f64, kappa: f64, gamma_phi: f64) -> Result<f64> {
    if !(gamma_phi > 0.0) || !(kappa > 0.0) {
        return Err(Error::OptimumUnbounded("cooperativity is infinite".into()));
    }
    Ok((2.0 / cooperativity(n_spins, g, kappa, gamma_phi)).sqrt())
}

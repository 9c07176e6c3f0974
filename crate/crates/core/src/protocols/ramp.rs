use serde::{Deserialize, Serialize};

use crate::dynamics::CoefficientSchedule;
use crate::error::{Error, Result};
use crate::linalg::Operator;
use crate::spin::SpinOperators;

/// Smooth squeeze-parameter ramp at constant Bogoliubov energy:
/// `Im lambda(t) = (30 r_f / tau) (s - 1)^2 s^2` with `s = t / tau` and
/// `r(t) = r_f s^3 (6 s^2 - 15 s + 10)`, so that `dr/dt = Im lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampSchedule {
    pub r_f: f64,
    pub tau_prot: f64,
    pub e_beta: f64,
}

impl RampSchedule {
    pub fn new(r_f: f64, tau_prot: f64, e_beta: f64) -> Result<Self> {
        if !(r_f >= 0.0 && r_f.is_finite()) {
            return Err(Error::InvalidParameter(format!("r_f must be finite and non-negative, got {r_f}")));
        }
        if !(tau_prot > 0.0 && tau_prot.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau_prot must be positive, got {tau_prot}")));
        }
        if !(e_beta > 0.0) {
            return Err(Error::InvalidParameter(format!("E_beta must be positive, got {e_beta}")));
        }
        Ok(Self { r_f, tau_prot, e_beta })
    }

    fn s(&self, t: f64) -> f64 {
        (t / self.tau_prot).clamp(0.0, 1.0)
    }

    pub fn r(&self, t: f64) -> f64 {
        let s = self.s(t);
        self.r_f * s * s * s * (6.0 * s * s - 15.0 * s + 10.0)
    }

    pub fn lambda_im(&self, t: f64) -> f64 {
        let s = self.s(t);
        30.0 * self.r_f / self.tau_prot * (s - 1.0).powi(2) * s * s
    }

    pub fn delta_c(&self, t: f64) -> f64 {
        self.e_beta * (2.0 * self.r(t)).cosh()
    }

    pub fn lambda_re(&self, t: f64) -> f64 {
        self.e_beta * (2.0 * self.r(t)).sinh()
    }

    /// Spin detuning cancelling the residual `Sz` term, leaving
    /// `-chi Sigma^dag Sigma` with an exact zero-energy dark state.
    pub fn delta_s(&self, _t: f64) -> f64 {
        0.0
    }

    /// `H(t) = -chi Sigma[r(t)]^dag Sigma[r(t)]
    ///       = -chi [cosh 2r (S^2 - Sz^2) + Sz - sinh 2r (Sx^2 - Sy^2)]`.
    pub fn hamiltonian(&self, ops: &SpinOperators, chi: f64) -> CoefficientSchedule {
        let sq = |o: &Operator| o.mul(o).expect("same block");
        let (sx2, sy2, sz2) = (sq(&ops.sx), sq(&ops.sy), sq(&ops.sz));
        let perp = ops.s2.sub(&sz2).expect("same block");
        let twist = sx2.sub(&sy2).expect("same block");
        let (a, b) = (*self, *self);
        CoefficientSchedule::new(ops.basis())
            .term(move |t| -chi * (2.0 * a.r(t)).cosh(), perp)
            .term(move |_| -chi, ops.sz.clone())
            .term(move |t| chi * (2.0 * b.r(t)).sinh(), twist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{block_operators, sigma_operator};
    use approx::assert_relative_eq;

    #[test]
    fn endpoints() {
        let s = RampSchedule::new(4.0, 60.0, 20.0).unwrap();
        assert_eq!(s.r(0.0), 0.0);
        assert_relative_eq!(s.r(60.0), 4.0, epsilon = 1e-14);
        assert_eq!(s.lambda_im(0.0), 0.0);
        assert_relative_eq!(s.lambda_im(60.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.delta_c(0.0), 20.0);
        assert_eq!(s.lambda_re(0.0), 0.0);
    }

    #[test]
    fn lambda_im_is_the_derivative_of_r() {
        let s = RampSchedule::new(4.0, 60.0, 20.0).unwrap();
        let h = 1e-4;
        for k in 1..600 {
            let t = k as f64 * 0.1;
            let fd = (s.r(t + h) - s.r(t - h)) / (2.0 * h);
            assert!((fd - s.lambda_im(t)).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn hamiltonian_is_minus_chi_sigma_dag_sigma() {
        let s = RampSchedule::new(2.0, 10.0, 20.0).unwrap();
        let ops = block_operators(6);
        let sched = s.hamiltonian(&ops, 0.3);
        for t in [0.0, 3.3, 7.1, 10.0] {
            let sig = sigma_operator(&ops, s.r(t));
            let expect = sig.dagger().mul(&sig).unwrap().scale_re(-0.3);
            let got = sched.at(t);
            assert!(got.sub(&expect).unwrap().max_abs() < 1e-12);
        }
    }
}

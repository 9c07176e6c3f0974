//! Spin moments, the minimal variance perpendicular to the mean spin, and
//! the Ramsey squeezing parameter `xi_R^2 = N var_min / |<S>|^2`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Basis, PureState, SparseMatrix, C64, ONE, ZERO};
use crate::spin::block_operators;

/// First moments and symmetrized second moments `<(SaSb + SbSa)/2>`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinMoments {
    pub mean: [f64; 3],
    pub second: [[f64; 3]; 3],
}

impl SpinMoments {
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let mut c = self.second;
        for a in 0..3 {
            for b in 0..3 {
                c[a][b] -= self.mean[a] * self.mean[b];
            }
        }
        c
    }

    pub fn variance(&self, axis: usize) -> f64 {
        self.second[axis][axis] - self.mean[axis] * self.mean[axis]
    }

    /// Variance of `e . S` for a unit vector `e`.
    pub fn variance_along(&self, e: [f64; 3]) -> f64 {
        let c = self.covariance();
        let mut v = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                v += e[a] * c[a][b] * e[b];
            }
        }
        v
    }

    pub fn mean_length(&self) -> f64 {
        norm(self.mean)
    }

    /// Weighted sum, used to mix moments of an ensemble of states.
    pub fn accumulate(&mut self, other: &SpinMoments, weight: f64) {
        for a in 0..3 {
            self.mean[a] += weight * other.mean[a];
            for b in 0..3 {
                self.second[a][b] += weight * other.second[a][b];
            }
        }
    }

    /// Moments after a rotation `R` acting on the spin vector.
    pub fn rotated(&self, rot: [[f64; 3]; 3]) -> SpinMoments {
        let mut out = SpinMoments::default();
        for a in 0..3 {
            for p in 0..3 {
                out.mean[a] += rot[a][p] * self.mean[p];
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                let mut s = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        s += rot[a][p] * self.second[p][q] * rot[b][q];
                    }
                }
                out.second[a][b] = s;
            }
        }
        out
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Sparse collective `Sx, Sy, Sz` for a basis, ready for moment evaluation.
#[derive(Clone, Debug)]
pub struct MomentOperators {
    basis: Basis,
    ops: [SparseMatrix; 3],
}

impl MomentOperators {
    pub fn for_basis(basis: Basis) -> Self {
        let ops = match basis {
            Basis::Dicke { two_j } => {
                let o = block_operators(two_j);
                [o.sx.to_sparse(), o.sy.to_sparse(), o.sz.to_sparse()]
            }
            Basis::Product { n_spins } => {
                let c = crate::product::collective(n_spins);
                [c[0].to_sparse(), c[1].to_sparse(), c[2].to_sparse()]
            }
            Basis::SpinFock { two_j, cutoff } => {
                let o = block_operators(two_j);
                let id = nalgebra::DMatrix::<C64>::identity(cutoff, cutoff);
                let lift = |m: &nalgebra::DMatrix<C64>| SparseMatrix::from_dense(&m.kronecker(&id));
                [lift(o.sx.matrix()), lift(o.sy.matrix()), lift(o.sz.matrix())]
            }
        };
        Self { basis, ops }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn pure(&self, psi: &[C64]) -> SpinMoments {
        let d = psi.len();
        let mut v: [Vec<C64>; 3] = [vec![ZERO; d], vec![ZERO; d], vec![ZERO; d]];
        for a in 0..3 {
            self.ops[a].matvec(psi, &mut v[a], ONE);
        }
        let mut m = SpinMoments::default();
        for a in 0..3 {
            m.mean[a] = inner(psi, &v[a]).re;
            for b in a..3 {
                let s = inner(&v[a], &v[b]).re;
                m.second[a][b] = s;
                m.second[b][a] = s;
            }
        }
        m
    }

    /// Moments of a row-major dense density matrix in this basis.
    pub fn density(&self, rho: &[C64]) -> SpinMoments {
        let d = self.ops[0].dim();
        let mut sr: [Vec<C64>; 3] = [vec![ZERO; d * d], vec![ZERO; d * d], vec![ZERO; d * d]];
        for a in 0..3 {
            self.ops[a].mul_dense(rho, &mut sr[a]);
        }
        let mut m = SpinMoments::default();
        for a in 0..3 {
            m.mean[a] = trace(&sr[a], d).re;
            for b in a..3 {
                // tr(Sa Sb rho): multiply Sa into the rows of (Sb rho)
                let mut out = vec![ZERO; d * d];
                self.ops[a].mul_dense(&sr[b], &mut out);
                let s = trace(&out, d).re;
                m.second[a][b] = s;
                m.second[b][a] = s;
            }
        }
        m
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn trace(m: &[C64], d: usize) -> C64 {
    (0..d).map(|i| m[i * d + i]).sum()
}

/// Moments of a pure state in any supported basis.
pub fn spin_moments(state: &PureState) -> SpinMoments {
    MomentOperators::for_basis(state.basis()).pure(state.amplitudes().as_slice())
}

/// Orthonormal pair perpendicular to `n`: `e1` is Gram-Schmidt of the
/// coordinate axis along the smallest component of `n` (first on ties),
/// `e2 = n x e1`.
pub fn perpendicular_basis(n: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut k = 0;
    for a in 1..3 {
        if n[a].abs() < n[k].abs() {
            k = a;
        }
    }
    let mut e1 = [0.0; 3];
    e1[k] = 1.0;
    let p = dot(e1, n);
    for a in 0..3 {
        e1[a] -= p * n[a];
    }
    let l = norm(e1);
    for x in e1.iter_mut() {
        *x /= l;
    }
    let e2 = cross(n, e1);
    (e1, e2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerpendicularVariance {
    pub var_min: f64,
    pub var_max: f64,
    /// Angle of the minimizing direction in the `(e1, e2)` plane, in (-pi/2, pi/2].
    pub theta_opt: f64,
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

impl PerpendicularVariance {
    pub fn direction(&self) -> [f64; 3] {
        let (c, s) = (self.theta_opt.cos(), self.theta_opt.sin());
        [
            c * self.e1[0] + s * self.e2[0],
            c * self.e1[1] + s * self.e2[1],
            c * self.e1[2] + s * self.e2[2],
        ]
    }
}

/// Closed-form minimum of the 2x2 covariance perpendicular to the mean spin.
pub fn min_perpendicular_variance(m: &SpinMoments, n_spins: usize) -> Result<PerpendicularVariance> {
    let len = m.mean_length();
    if !(len >= 1e-12 * n_spins as f64) {
        return Err(Error::MeanSpinVanished(len));
    }
    let n = [m.mean[0] / len, m.mean[1] / len, m.mean[2] / len];
    let (e1, e2) = perpendicular_basis(n);
    let c = m.covariance();
    let quad = |u: [f64; 3], v: [f64; 3]| {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += u[a] * c[a][b] * v[b];
            }
        }
        s
    };
    let (a, b, d) = (quad(e1, e1), quad(e1, e2), quad(e2, e2));
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let scale = a.abs().max(d.abs()).max(1e-300);
    let theta_opt = if rad <= 1e-12 * scale {
        0.0
    } else {
        // major axis at phi, minor axis perpendicular
        let phi = 0.5 * (2.0 * b).atan2(a - d);
        wrap_half_turn(phi + FRAC_PI_2)
    };
    Ok(PerpendicularVariance {
        var_min: mid - rad,
        var_max: mid + rad,
        theta_opt,
        e1,
        e2,
    })
}

fn wrap_half_turn(mut x: f64) -> f64 {
    use std::f64::consts::PI;
    while x > FRAC_PI_2 {
        x -= PI;
    }
    while x <= -FRAC_PI_2 {
        x += PI;
    }
    x
}

/// `xi_R^2 = N var_min / |<S>|^2`.
pub fn xi_r2(m: &SpinMoments, n_spins: usize) -> Result<f64> {
    let pv = min_perpendicular_variance(m, n_spins)?;
    Ok(n_spins as f64 * pv.var_min / (m.mean_length() * m.mean_length()))
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// One time sample of a squeezing trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingPoint {
    pub t: f64,
    pub moments: SpinMoments,
    pub var_min: f64,
    pub theta_opt: f64,
    /// `NaN` when the mean spin vanished.
    pub xi2: f64,
    pub xi2_db: f64,
}

impl SqueezingPoint {
    pub fn from_moments(t: f64, moments: SpinMoments, n_spins: usize) -> Self {
        match min_perpendicular_variance(&moments, n_spins) {
            Ok(pv) => {
                let len2 = moments.mean_length().powi(2);
                let xi2 = n_spins as f64 * pv.var_min / len2;
                Self {
                    t,
                    moments,
                    var_min: pv.var_min,
                    theta_opt: pv.theta_opt,
                    xi2,
                    xi2_db: to_db(xi2),
                }
            }
            Err(_) => {
                // no mean direction: report the smallest raw variance
                let var_min = (0..3).map(|a| moments.variance(a)).fold(f64::INFINITY, f64::min);
                Self {
                    t,
                    moments,
                    var_min,
                    theta_opt: f64::NAN,
                    xi2: f64::NAN,
                    xi2_db: f64::NAN,
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SqueezingTrace {
    pub n_spins: usize,
    pub points: Vec<SqueezingPoint>,
}

impl SqueezingTrace {
    pub fn new(n_spins: usize) -> Self {
        Self { n_spins, points: Vec::new() }
    }

    pub fn push(&mut self, t: f64, moments: SpinMoments) {
        self.points.push(SqueezingPoint::from_moments(t, moments, self.n_spins));
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn xi2(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.xi2).collect()
    }

    /// Sample with the smallest defined `xi2`.
    pub fn min_point(&self) -> Option<&SqueezingPoint> {
        self.points
            .iter()
            .filter(|p| p.xi2.is_finite())
            .min_by(|a, b| a.xi2.total_cmp(&b.xi2))
    }

    pub fn min_xi2(&self) -> f64 {
        self.min_point().map_or(f64::NAN, |p| p.xi2)
    }

    /// Multiply times by `factor` (unit conversion for export).
    pub fn scaled_times(&self, factor: f64) -> SqueezingTrace {
        let mut out = self.clone();
        for p in &mut out.points {
            p.t *= factor;
        }
        out
    }

    /// Index of the first local minimum of `xi2`, i.e. the optimum before
    /// the first revival; falls back to the global minimum.
    pub fn first_minimum(&self) -> Option<&SqueezingPoint> {
        let pts: Vec<&SqueezingPoint> = self.points.iter().filter(|p| p.xi2.is_finite()).collect();
        for w in 1..pts.len().saturating_sub(1) {
            if pts[w].xi2 <= pts[w - 1].xi2 && pts[w].xi2 < pts[w + 1].xi2 {
                return Some(pts[w]);
            }
        }
        self.min_point()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{coherent_spin_state, SpinSpace};
    use approx::assert_relative_eq;

    #[test]
    fn coherent_x_moments() {
        let n = 10;
        let space = SpinSpace::new(n).unwrap();
        let psi = coherent_spin_state(&space, n as u32, FRAC_PI_2, 0.0).unwrap();
        let m = spin_moments(&psi);
        assert_relative_eq!(m.mean[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(m.mean[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.variance(1), 2.5, epsilon = 1e-12);
        assert_relative_eq!(m.variance(2), 2.5, epsilon = 1e-12);
        let pv = min_perpendicular_variance(&m, n).unwrap();
        assert_relative_eq!(pv.var_min, 2.5, epsilon = 1e-12);
        assert_eq!(pv.theta_opt, 0.0);
        assert_relative_eq!(xi_r2(&m, n).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn south_pole_moments() {
        let n = 6;
        let space = SpinSpace::new(n).unwrap();
        let psi = coherent_spin_state(&space, n as u32, std::f64::consts::PI, 0.0).unwrap();
        let m = spin_moments(&psi);
        assert_relative_eq!(m.mean[2], -3.0, epsilon = 1e-12);
        assert!(m.variance(2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_picks_smaller_axis() {
        // mean along x, covariance diag(a, b) in the (y, z) plane
        let mut m = SpinMoments::default();
        m.mean = [4.0, 0.0, 0.0];
        m.second[0][0] = 16.0;
        m.second[1][1] = 0.5;
        m.second[2][2] = 3.0;
        let pv = min_perpendicular_variance(&m, 8).unwrap();
        assert_eq!(pv.e1, [0.0, 1.0, 0.0]);
        assert_eq!(pv.e2, [0.0, 0.0, 1.0]);
        assert_relative_eq!(pv.var_min, 0.5);
        assert_relative_eq!(pv.theta_opt, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn vanished_mean_is_an_error() {
        let m = SpinMoments::default();
        assert!(matches!(xi_r2(&m, 4), Err(Error::MeanSpinVanished(_))));
        let p = SqueezingPoint::from_moments(0.0, m, 4);
        assert!(p.xi2.is_nan());
    }

    #[test]
    fn coherent_states_are_unsqueezed_everywhere() {
        let n = 7;
        let space = SpinSpace::new(n).unwrap();
        for (th, ph) in [(0.2, 0.1), (1.3, 2.9), (2.8, -1.0)] {
            let psi = coherent_spin_state(&space, n as u32, th, ph).unwrap();
            assert_relative_eq!(xi_r2(&spin_moments(&psi), n).unwrap(), 1.0, epsilon = 1e-10);
        }
    }
}

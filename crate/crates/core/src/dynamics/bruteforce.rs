use nalgebra::DMatrix;

use super::lindblad::DenseLindbladian;
use crate::error::{Error, Result};
use crate::linalg::{Basis, Operator, C64};
use crate::metrics::{MomentOperators, SpinMoments};
use crate::model::EffectiveParams;
use crate::ode::{dopri5, IntegratorOptions, IntegratorStats};
use crate::product::{collective, sigma_z};

pub const BRUTE_FORCE_MAX_SPINS: usize = 8;

#[derive(Clone, Debug)]
pub struct BruteForceTrajectory {
    pub times: Vec<f64>,
    pub moments: Vec<SpinMoments>,
    pub final_state: DMatrix<C64>,
    pub stats: IntegratorStats,
}

/// Effective Hamiltonian, collective decay and one dephasing jump per spin,
/// all on the full `2^N` product space.
pub fn product_space_model(params: &EffectiveParams, gamma_phi: f64) -> Result<(Operator, Vec<Operator>)> {
    let n = params.n_spins;
    if n > BRUTE_FORCE_MAX_SPINS {
        return Err(Error::RefusedSize(n));
    }
    let [sx, sy, sz] = collective(n);
    let sq = |o: &Operator| o.mul(o).expect("same basis");
    let (sx2, sy2) = (sq(&sx), sq(&sy));
    let ct = params.chi_tilde;
    let t = params.tanh_2r();
    // S^2 - Sz^2 = Sx^2 + Sy^2
    let h = Operator::combine(&[
        (params.delta_tilde, &sz),
        (-ct * (1.0 - t), &sx2),
        (-ct * (1.0 + t), &sy2),
    ])?;
    let mut jumps = Vec::new();
    if params.gamma_big > 0.0 {
        let z = sx
            .scale_re((-2.0 * params.r).exp())
            .add(&sy.scale(C64::new(0.0, -(2.0 * params.r).exp())))?;
        jumps.push(z.scale_re(params.gamma_big.sqrt()));
    }
    if gamma_phi > 0.0 {
        for k in 0..n {
            jumps.push(sigma_z(n, k).scale_re((0.5 * gamma_phi).sqrt()));
        }
    }
    Ok((h, jumps))
}

/// Master equation on the full product space, for `N <= 8` only.
pub fn evolve_bruteforce(
    h: &Operator,
    jumps: &[Operator],
    rho0: &DMatrix<C64>,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<BruteForceTrajectory> {
    let Basis::Product { n_spins } = h.basis() else {
        return Err(Error::BasisMismatch {
            left: h.basis().to_string(),
            right: "product basis".into(),
        });
    };
    if n_spins > BRUTE_FORCE_MAX_SPINS {
        return Err(Error::RefusedSize(n_spins));
    }
    let d = h.dim();
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(Error::InvalidParameter(format!("initial state must be {d} x {d}")));
    }
    let l = DenseLindbladian::new(h, jumps)?;
    let mut scratch = l.scratch();
    let ops = MomentOperators::for_basis(h.basis());
    let y0: Vec<C64> = (0..d * d).map(|k| rho0[(k / d, k % d)]).collect();
    let mut moments = Vec::with_capacity(times.len());
    let (y, stats) = dopri5(
        |_, y, dy| {
            dy.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            l.apply_add(y, dy, &mut scratch);
        },
        0.0,
        y0,
        times,
        opts,
        |_, _, y| {
            moments.push(ops.density(y));
            Ok(())
        },
    )?;
    Ok(BruteForceTrajectory {
        times: times.to_vec(),
        moments,
        final_state: DMatrix::from_row_slice(d, d, &y),
        stats,
    })
}

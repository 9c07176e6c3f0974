//! Internal consistency gates shared by `verify` and the test suites.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    echo_trace_static, evolve_bruteforce, evolve_lindblad, product_space_model, BlockDensityMatrix, BlockLindbladian,
    LindbladOptions,
};
use crate::error::Result;
use crate::linalg::{Basis, Operator, PureState, C64};
use crate::metrics::{MomentOperators, SpinMoments, SqueezingTrace};
use crate::model::{build_full_rot_model, build_preset, fock_tail_population, DriveParams, EffectiveParams, PresetKind};
use crate::ode::IntegratorOptions;
use crate::output::Gate;
use crate::product::dicke_embedding;
use crate::protocols::RampSchedule;
use crate::spin::{block_operators, coherent_spin_state, pi_x_rotation, SpinSpace};

pub const ORACLE_TOLERANCE: f64 = 1e-7;
pub const FULL_MODEL_TOLERANCE: f64 = 0.05;
pub const RAMP_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Quick,
    Full,
}

fn moment_distance(a: &SpinMoments, b: &SpinMoments) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        worst = worst.max((a.mean[i] - b.mean[i]).abs());
        for j in 0..3 {
            worst = worst.max((a.second[i][j] - b.second[i][j]).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleDraw {
    pub n_spins: usize,
    pub e_beta: f64,
    pub lambda_ratio: f64,
    pub kappa: f64,
    pub gamma_phi: f64,
    pub delta_s: f64,
    pub max_error: f64,
}

/// Block master equation against the product-space master equation for
/// random drives and random symmetric initial states, over
/// `chi t in [0, 5/N]`.
pub fn oracle_equivalence(ns: &[usize], draws: usize, seed: u64) -> Result<Vec<OracleDraw>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = IntegratorOptions::lindblad_default().with_tolerances(1e-10, 1e-12);
    let mut out = Vec::new();
    for &n in ns {
        for _ in 0..draws {
            let e_beta = rng.random_range(2.0..20.0);
            let lambda_ratio = rng.random_range(-0.8..0.8);
            let kappa = rng.random_range(0.0..3.0);
            let gamma_phi = rng.random_range(0.0..1.0);
            let delta_s = rng.random_range(-1.0..1.0);
            let amps: Vec<C64> = (0..=n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let drive = DriveParams::from_target(n, e_beta, lambda_ratio)?
                .with_dissipation(kappa, gamma_phi)
                .with_delta_s(delta_s);
            let p = EffectiveParams::from_drive(&drive)?;
            let space = SpinSpace::new(n)?;
            let psi = PureState::new(Basis::Dicke { two_j: n as u32 }, DVector::from_vec(amps)).normalized();
            let t_end = 5.0 / (n as f64 * p.chi);
            let times: Vec<f64> = (0..=5).map(|k| t_end * k as f64 / 5.0).collect();

            let block = BlockLindbladian::from_effective(&space, &p, gamma_phi)?;
            let rho0 = BlockDensityMatrix::from_pure(&space, &psi)?;
            let lopts = LindbladOptions {
                integrator: opts,
                ..LindbladOptions::default()
            };
            let a = evolve_lindblad(&block, &rho0, &times, &lopts)?;

            let (h, jumps) = product_space_model(&p, gamma_phi)?;
            let v = dicke_embedding(n) * psi.amplitudes();
            let rho_prod: DMatrix<C64> = &v * v.adjoint();
            let b = evolve_bruteforce(&h, &jumps, &rho_prod, &times, &opts)?;

            let max_error = a
                .moments
                .iter()
                .zip(&b.moments)
                .map(|(x, y)| moment_distance(x, y))
                .fold(0.0, f64::max);
            out.push(OracleDraw {
                n_spins: n,
                e_beta,
                lambda_ratio,
                kappa,
                gamma_phi,
                delta_s,
                max_error,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FullModelComparison {
    pub n_spins: usize,
    pub cutoff: usize,
    pub effective: SqueezingTrace,
    pub full: SqueezingTrace,
    /// Time of the effective-model optimum, `1/g`.
    pub t_opt: f64,
    pub effective_min: f64,
    /// Equal-time sample at the effective optimum.
    pub full_at_opt: f64,
    /// Full-model optimum within the first squeezing window.
    pub full_min: f64,
    /// `|full_min / effective_min - 1|`. The full trace carries a fast
    /// micromotion at the Bogoliubov frequency, so optima rather than
    /// equal-time samples are compared.
    pub relative_difference: f64,
    pub fock_tail: f64,
}

/// Echoed ITAT in the full spin-cavity model (cavity starting in vacuum)
/// against the effective spin model, for `N = 4`, `lambda = delta_c / 3`.
pub fn full_vs_effective(g_over_e_beta: f64, cutoff: usize, t_max: f64, points: usize) -> Result<FullModelComparison> {
    let n = 4;
    let e_beta = 1.0 / g_over_e_beta;
    let base = DriveParams::from_target(n, e_beta, 0.0)?;
    let preset = build_preset(PresetKind::Itat, &base, &Default::default())?;
    let space = SpinSpace::new(n)?;
    let two_j = n as u32;
    let psi0 = coherent_spin_state(&space, two_j, std::f64::consts::FRAC_PI_2, 0.0)?;
    let times: Vec<f64> = (0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect();

    let mops = MomentOperators::for_basis(psi0.basis());
    let eff_states = echo_trace_static(&preset.hamiltonian, &psi0, &times, &pi_x_rotation(two_j))?;
    let mut effective = SqueezingTrace::new(n);
    for (t, s) in times.iter().zip(&eff_states) {
        effective.push(*t, mops.pure(s.amplitudes().as_slice()));
    }

    let full = build_full_rot_model(two_j, cutoff, &preset.drive)?;
    let basis = full.hamiltonian.basis();
    let mut vac = DVector::zeros(cutoff);
    vac[0] = C64::new(1.0, 0.0);
    let psi_full = PureState::new(basis, psi0.amplitudes().kronecker(&vac));
    let pulse = Operator::new(
        basis,
        pi_x_rotation(two_j).matrix().kronecker(&DMatrix::<C64>::identity(cutoff, cutoff)),
    );
    let full_states = echo_trace_static(&full.hamiltonian, &psi_full, &times, &pulse)?;
    let fops = MomentOperators::for_basis(basis);
    let mut full_trace = SqueezingTrace::new(n);
    let mut fock_tail: f64 = 0.0;
    for (t, s) in times.iter().zip(&full_states) {
        full_trace.push(*t, fops.pure(s.amplitudes().as_slice()));
        fock_tail = fock_tail.max(fock_tail_population(s));
    }

    let (k, eff_min) = effective
        .points
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, p)| p.xi2.is_finite())
        .min_by(|a, b| a.1.xi2.total_cmp(&b.1.xi2))
        .map(|(k, p)| (k, p.xi2))
        .expect("non-empty trace");
    let full_at_opt = full_trace.points[k].xi2;
    // first squeezing window: up to the return of the effective xi2 to 1
    let end = (k..points)
        .find(|&i| effective.points[i].xi2 >= 1.0)
        .unwrap_or(points - 1);
    let full_min = full_trace.points[1..=end]
        .iter()
        .map(|p| p.xi2)
        .filter(|x| x.is_finite())
        .fold(f64::INFINITY, f64::min);
    Ok(FullModelComparison {
        n_spins: n,
        cutoff,
        t_opt: times[k],
        effective_min: eff_min,
        full_at_opt,
        full_min,
        relative_difference: (full_min / eff_min - 1.0).abs(),
        fock_tail,
        effective,
        full: full_trace,
    })
}

/// Largest `|dr/dt - Im lambda|` over a dense grid, by central differences.
pub fn ramp_self_consistency(r_f: f64, tau: f64) -> Result<f64> {
    let s = RampSchedule::new(r_f, tau, 1.0)?;
    let h = 1e-5 * tau;
    let mut worst: f64 = 0.0;
    for k in 1..1000 {
        let t = tau * k as f64 / 1000.0;
        let d = (s.r(t + h) - s.r(t - h)) / (2.0 * h);
        worst = worst.max((d - s.lambda_im(t)).abs());
    }
    Ok(worst)
}

/// Spectrum of the full model's spin sector at `g = 0` is the bare
/// cavity ladder plus `Delta_s m`.
fn decoupled_limit() -> Result<f64> {
    let mut p = DriveParams::new(2, 5.0, 0.0);
    p.g = 0.0;
    p.delta_s = 0.7;
    let full = build_full_rot_model(2, 8, &p)?;
    let mut want = Vec::new();
    for m in [-1.0, 0.0, 1.0] {
        for k in 0..8 {
            want.push(5.0 * k as f64 + 0.7 * m);
        }
    }
    want.sort_by(f64::total_cmp);
    let got = crate::linalg::HermitianEigen::new(full.hamiltonian.matrix()).sorted_values();
    Ok(want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Run the gates for a verification level.
pub fn verify(level: Level) -> Vec<Gate> {
    let mut gates = Vec::new();
    let (ns, draws): (&[usize], usize) = match level {
        Level::Quick => (&[4], 3),
        Level::Full => (&[2, 3, 4], 10),
    };
    match oracle_equivalence(ns, draws, 7) {
        Ok(d) => {
            let worst = d.iter().map(|x| x.max_error).fold(0.0, f64::max);
            gates.push(Gate::new(
                "oracle_equivalence",
                worst < ORACLE_TOLERANCE,
                format!("{} draws, N in {:?}, max |moment error| = {worst:.3e} (< {ORACLE_TOLERANCE:e})", d.len(), ns),
            ));
        }
        Err(e) => gates.push(Gate::new("oracle_equivalence", false, e.to_string())),
    }
    match full_vs_effective(0.05, 16, 12.0, 1201) {
        Ok(c) => gates.push(Gate::new(
            "full_vs_effective",
            c.relative_difference < FULL_MODEL_TOLERANCE,
            format!(
                "N = 4, cutoff 16: optimal xi2 eff {:.5} vs full {:.5} (rel. diff {:.4}, < {FULL_MODEL_TOLERANCE})",
                c.effective_min, c.full_min, c.relative_difference
            ),
        )),
        Err(e) => gates.push(Gate::new("full_vs_effective", false, e.to_string())),
    }
    match ramp_self_consistency(4.0, 60.0) {
        Ok(w) => gates.push(Gate::new(
            "ramp_self_consistency",
            w < RAMP_TOLERANCE,
            format!("max |dr/dt - Im lambda| = {w:.3e} (< {RAMP_TOLERANCE:e})"),
        )),
        Err(e) => gates.push(Gate::new("ramp_self_consistency", false, e.to_string())),
    }
    match decoupled_limit() {
        Ok(w) => gates.push(Gate::new(
            "decoupled_spectrum",
            w < 1e-10,
            format!("g = 0 spectrum error {w:.3e}"),
        )),
        Err(e) => gates.push(Gate::new("decoupled_spectrum", false, e.to_string())),
    }
    if level == Level::Full {
        let ops = block_operators(4);
        let space = SpinSpace::new(4).expect("valid size");
        let worst = [0.5, 1.0, 2.0]
            .iter()
            .map(|&r| {
                crate::spin::dark_state(&space, r)
                    .and_then(|d| crate::spin::sigma_operator(&ops, r).apply(&d))
                    .map_or(f64::INFINITY, |v| v.norm())
            })
            .fold(0.0, f64::max);
        gates.push(Gate::new(
            "dark_state_annihilated",
            worst < 1e-10,
            format!("max |Sigma[r] psi_dark| = {worst:.3e}"),
        ));
    }
    gates
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_gates_pass() {
        for g in verify(Level::Quick) {
            assert!(g.passed, "{}: {}", g.name, g.detail);
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let a = oracle_equivalence(&[2], 2, 11).unwrap();
        let b = oracle_equivalence(&[2], 2, 11).unwrap();
        assert_eq!(a[1].e_beta, b[1].e_beta);
        assert_eq!(a[1].max_error, b[1].max_error);
    }
}

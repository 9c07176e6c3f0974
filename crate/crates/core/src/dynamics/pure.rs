use nalgebra::{DMatrix, DVector};

use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::linalg::{lanczos_expm, Basis, HermitianEigen, Operator, PureState, SparseMatrix, C64, ONE};
use crate::ode::{check_time_grid, dopri5, IntegratorOptions, IntegratorStats, MagnusCf4, Method};

/// Largest tolerated `| |psi| - 1 |` at an output time.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy)]
pub enum PureHamiltonian<'a> {
    Static(&'a Operator),
    Scheduled(&'a dyn Schedule),
}

impl PureHamiltonian<'_> {
    pub fn basis(&self) -> Basis {
        match self {
            PureHamiltonian::Static(h) => h.basis(),
            PureHamiltonian::Scheduled(s) => s.basis(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PureTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<PureState>,
    pub stats: IntegratorStats,
    pub max_norm_drift: f64,
}

impl PureTrajectory {
    pub fn final_state(&self) -> Option<&PureState> {
        self.states.last()
    }
}

/// Schrodinger evolution from `t = 0`, recording the state at every output time.
pub fn evolve_pure(
    h: PureHamiltonian<'_>,
    psi0: &PureState,
    times: &[f64],
    opts: &IntegratorOptions,
) -> Result<PureTrajectory> {
    let mut traj = PureTrajectory {
        times: times.to_vec(),
        states: Vec::with_capacity(times.len()),
        stats: IntegratorStats::default(),
        max_norm_drift: 0.0,
    };
    let basis = psi0.basis();
    let (_, stats) = segment(h, psi0, 0.0, times, opts, |_, _, psi| {
        traj.states.push(PureState::new(basis, psi.clone()));
        Ok(())
    })?;
    traj.stats = stats;
    traj.max_norm_drift = traj.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    Ok(traj)
}

/// As [`evolve_pure`], applying the unitary `pulse` once at `t_pulse`.
/// Output times equal to `t_pulse` record the state before the pulse.
pub fn evolve_pure_with_echo(
    h: PureHamiltonian<'_>,
    psi0: &PureState,
    times: &[f64],
    pulse: &Operator,
    t_pulse: f64,
    opts: &IntegratorOptions,
) -> Result<PureTrajectory> {
    check_time_grid(0.0, times)?;
    if pulse.basis() != psi0.basis() {
        return Err(Error::BasisMismatch {
            left: pulse.basis().to_string(),
            right: psi0.basis().to_string(),
        });
    }
    let split = times.partition_point(|&t| t <= t_pulse);
    let mut first: Vec<f64> = times[..split].to_vec();
    let add_pulse_point = first.last().map_or(true, |&t| t < t_pulse);
    if add_pulse_point {
        first.push(t_pulse);
    }
    let pre = evolve_pure(h, psi0, &first, opts)?;
    let mut states = pre.states;
    let mut stats = pre.stats;
    let at_pulse = if add_pulse_point { states.pop().expect("pulse point") } else { states.last().cloned().expect("pulse point") };
    let kicked = pulse.apply(&at_pulse)?;
    let basis = psi0.basis();
    if split < times.len() {
        let (_, s2) = segment(h, &kicked, t_pulse, &times[split..], opts, |_, _, psi| {
            states.push(PureState::new(basis, psi.clone()));
            Ok(())
        })?;
        stats.merge(&s2);
    }
    let max_norm_drift = states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
    Ok(PureTrajectory {
        times: times.to_vec(),
        states,
        stats,
        max_norm_drift,
    })
}

/// Echo trace for a static Hamiltonian: for every output time `t` the state
/// `U(t/2) P U(t/2) psi0`, computed exactly from one eigendecomposition.
pub fn echo_trace_static(h: &Operator, psi0: &PureState, times: &[f64], pulse: &Operator) -> Result<Vec<PureState>> {
    check_time_grid(0.0, times)?;
    for b in [h.basis(), pulse.basis()] {
        if b != psi0.basis() {
            return Err(Error::BasisMismatch {
                left: b.to_string(),
                right: psi0.basis().to_string(),
            });
        }
    }
    let eig = HermitianEigen::new(h.matrix());
    // in the eigenbasis: c(t) = D(t/2) W D(t/2) c0 with W = V^dag P V
    let w = eig.vectors.ad_mul(&(pulse.matrix() * &eig.vectors));
    let c0 = eig.vectors.ad_mul(psi0.amplitudes());
    let out = times
        .iter()
        .map(|&t| {
            let phase = |i: usize| C64::from_polar(1.0, -eig.values[i] * 0.5 * t);
            let half = DVector::from_fn(c0.len(), |i, _| c0[i] * phase(i));
            let mixed = &w * half;
            let end = DVector::from_fn(mixed.len(), |i, _| mixed[i] * phase(i));
            PureState::new(psi0.basis(), &eig.vectors * end)
        })
        .collect();
    Ok(out)
}

fn norm_check(t: f64, psi: &DVector<C64>) -> Result<()> {
    let drift = (psi.norm() - 1.0).abs();
    if drift > NORM_DRIFT_TOLERANCE {
        return Err(Error::IntegrationFailure {
            time: t,
            reason: format!("norm drift {drift:e} exceeds {NORM_DRIFT_TOLERANCE:e}"),
        });
    }
    Ok(())
}

/// Integrates from `t0` through `times`, observing each output.
fn segment<O>(
    h: PureHamiltonian<'_>,
    psi0: &PureState,
    t0: f64,
    times: &[f64],
    opts: &IntegratorOptions,
    mut observe: O,
) -> Result<(DVector<C64>, IntegratorStats)>
where
    O: FnMut(usize, f64, &DVector<C64>) -> Result<()>,
{
    opts.validate()?;
    check_time_grid(t0, times)?;
    if h.basis() != psi0.basis() {
        return Err(Error::BasisMismatch {
            left: h.basis().to_string(),
            right: psi0.basis().to_string(),
        });
    }
    let mut observe = |k: usize, t: f64, psi: &DVector<C64>| -> Result<()> {
        norm_check(t, psi)?;
        observe(k, t, psi)
    };
    let mut stats = IntegratorStats::default();
    match (h, opts.method) {
        (PureHamiltonian::Static(op), Method::AdaptiveRk) => {
            let sp = op.to_sparse();
            let (y, st) = dopri5(
                |_, y, dy| sp.matvec(y, dy, -crate::linalg::I),
                t0,
                psi0.amplitudes().as_slice().to_vec(),
                times,
                opts,
                |k, t, y| observe(k, t, &DVector::from_column_slice(y)),
            )?;
            Ok((DVector::from_vec(y), st))
        }
        (PureHamiltonian::Scheduled(s), Method::AdaptiveRk) => {
            let (y, st) = dopri5(
                |t, y, dy| s.apply(t, y, dy, -crate::linalg::I),
                t0,
                psi0.amplitudes().as_slice().to_vec(),
                times,
                opts,
                |k, t, y| observe(k, t, &DVector::from_column_slice(y)),
            )?;
            Ok((DVector::from_vec(y), st))
        }
        (PureHamiltonian::Static(op), Method::ExpmDense) => {
            let eig = HermitianEigen::new(op.matrix());
            let mut last = psi0.amplitudes().clone();
            for (k, &t) in times.iter().enumerate() {
                last = eig.propagate(psi0.amplitudes(), t - t0);
                observe(k, t, &last)?;
            }
            stats.accepted = times.len();
            Ok((last, stats))
        }
        (PureHamiltonian::Static(op), Method::ExpmKrylov) => {
            let sp = op.to_sparse();
            let dt = krylov_step(&sp, opts);
            let mut psi = psi0.amplitudes().clone();
            let mut t = t0;
            for (k, &t_out) in times.iter().enumerate() {
                let n = substeps(t_out - t, dt);
                let h_sub = (t_out - t) / n as f64;
                for _ in 0..n {
                    psi = lanczos_expm(&sp, &psi, h_sub, opts.krylov_dim);
                    stats.accepted += 1;
                }
                t = t_out;
                observe(k, t, &psi)?;
            }
            Ok((psi, stats))
        }
        (PureHamiltonian::Scheduled(s), Method::ExpmDense | Method::ExpmKrylov) => {
            if !opts.max_step.is_finite() {
                return Err(Error::InvalidParameter(
                    "a fixed-step propagator for a scheduled Hamiltonian needs a finite max_step".into(),
                ));
            }
            let dense = opts.method == Method::ExpmDense;
            let mut psi = psi0.amplitudes().clone();
            let mut t = t0;
            for (k, &t_out) in times.iter().enumerate() {
                let n = substeps(t_out - t, opts.max_step);
                let h_sub = (t_out - t) / n as f64;
                for i in 0..n {
                    let ts = t + i as f64 * h_sub;
                    psi = magnus_step(s, &psi, ts, h_sub, dense, opts.krylov_dim);
                    stats.accepted += 1;
                }
                t = t_out;
                observe(k, t, &psi)?;
            }
            Ok((psi, stats))
        }
    }
}

fn substeps(span: f64, dt: f64) -> usize {
    if span <= 0.0 {
        0
    } else {
        ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// Step for the Lanczos propagator: `max_step` if given, otherwise small
/// enough that `|H| dt` stays well inside the Krylov dimension.
fn krylov_step(sp: &SparseMatrix, opts: &IntegratorOptions) -> f64 {
    if opts.max_step.is_finite() {
        return opts.max_step;
    }
    let bound = sp.row_abs_sum_max().max(1e-300);
    0.25 * opts.krylov_dim as f64 / bound
}

fn magnus_step(s: &dyn Schedule, psi: &DVector<C64>, t: f64, h: f64, dense: bool, krylov_dim: usize) -> DVector<C64> {
    let h1 = s.dense(t + MagnusCf4::C1 * h);
    let h2 = s.dense(t + MagnusCf4::C2 * h);
    let first = &h1 * (ONE * MagnusCf4::A1) + &h2 * (ONE * MagnusCf4::A2);
    let second = &h1 * (ONE * MagnusCf4::A2) + &h2 * (ONE * MagnusCf4::A1);
    let apply = |m: &DMatrix<C64>, v: &DVector<C64>| {
        if dense {
            HermitianEigen::new(m).propagate(v, h)
        } else {
            lanczos_expm(&SparseMatrix::from_dense(m), v, h, krylov_dim)
        }
    };
    let mid = apply(&first, psi);
    apply(&second, &mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::schedule::CoefficientSchedule;
    use crate::spin::{block_operators, coherent_block_state, pi_x_rotation};

    fn twist(two_j: u32) -> Operator {
        let o = block_operators(two_j);
        let sz2 = o.sz.mul(&o.sz).unwrap();
        Operator::combine(&[(1.0, &sz2), (0.3, &o.sx)]).unwrap()
    }

    #[test]
    fn methods_agree_for_static_hamiltonian() {
        let h = twist(10);
        let psi0 = coherent_block_state(10, std::f64::consts::FRAC_PI_2, 0.0);
        let times = [0.1, 0.5, 1.3];
        let rk = evolve_pure(PureHamiltonian::Static(&h), &psi0, &times, &IntegratorOptions::pure_default()).unwrap();
        for m in [Method::ExpmDense, Method::ExpmKrylov] {
            let o = IntegratorOptions::pure_default().with_method(m);
            let other = evolve_pure(PureHamiltonian::Static(&h), &psi0, &times, &o).unwrap();
            for (a, b) in rk.states.iter().zip(&other.states) {
                let f = a.fidelity(b).unwrap();
                assert!(f > 1.0 - 1e-9, "{m:?}: {f}");
            }
        }
        assert!(rk.max_norm_drift < NORM_DRIFT_TOLERANCE);
    }

    #[test]
    fn magnus_matches_rk_for_schedule() {
        let o = block_operators(8);
        let sz2 = o.sz.mul(&o.sz).unwrap();
        let sched = CoefficientSchedule::new(o.sz.basis())
            .term(|t| 1.0 + 0.5 * (2.0 * t).sin(), sz2)
            .term(|t| t, o.sx.clone());
        let psi0 = coherent_block_state(8, 1.0, 0.2);
        let times = [0.4, 1.0];
        let rk = evolve_pure(
            PureHamiltonian::Scheduled(&sched),
            &psi0,
            &times,
            &IntegratorOptions::pure_default().with_tolerances(1e-11, 1e-13),
        )
        .unwrap();
        let mg = evolve_pure(
            PureHamiltonian::Scheduled(&sched),
            &psi0,
            &times,
            &IntegratorOptions::pure_default().with_method(Method::ExpmDense).with_max_step(0.01),
        )
        .unwrap();
        for (a, b) in rk.states.iter().zip(&mg.states) {
            assert!(a.fidelity(b).unwrap() > 1.0 - 1e-10);
        }
    }

    #[test]
    fn static_echo_trace_matches_pulsed_run() {
        let h = twist(6);
        let pulse = pi_x_rotation(6);
        let psi0 = coherent_block_state(6, 0.7, 0.3);
        let t = 1.4;
        let exact = echo_trace_static(&h, &psi0, &[t], &pulse).unwrap();
        let run = evolve_pure_with_echo(
            PureHamiltonian::Static(&h),
            &psi0,
            &[0.2, t],
            &pulse,
            t / 2.0,
            &IntegratorOptions::pure_default(),
        )
        .unwrap();
        assert!(exact[0].fidelity(&run.states[1]).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let h = twist(4);
        let psi0 = coherent_block_state(6, 0.7, 0.3);
        let err = evolve_pure(PureHamiltonian::Static(&h), &psi0, &[1.0], &IntegratorOptions::pure_default());
        assert!(matches!(err, Err(Error::BasisMismatch { .. })));
    }
}

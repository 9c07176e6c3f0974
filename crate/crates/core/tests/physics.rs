use nalgebra::DVector;
use proptest::prelude::*;
use spinsq::dynamics::{evolve_lindblad, evolve_pure, BlockDensityMatrix, BlockLindbladian, LindbladOptions, PureHamiltonian};
use spinsq::linalg::{Basis, Operator, PureState, C64};
use spinsq::metrics::{min_perpendicular_variance, spin_moments, xi_r2};
use spinsq::model::{build_full_rot_model, DriveParams};
use spinsq::ode::IntegratorOptions;
use spinsq::spin::{block_operators, rotation, SpinSpace};

fn sorted_eigenvalues(h: &Operator) -> Vec<f64> {
    let mut ev: Vec<f64> = h.matrix().clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn single_spin_resonance_gives_vacuum_rabi_doublet() {
    let delta = 3.0;
    let mut p = DriveParams::new(1, delta, 0.0).with_delta_s(delta);
    p.g = 0.7;
    let full = build_full_rot_model(1, 10, &p).unwrap();
    let ev = sorted_eigenvalues(&full.hamiltonian);
    assert!((ev[0] + delta / 2.0).abs() < 1e-12);
    assert!((ev[1] - (delta / 2.0 - p.g)).abs() < 1e-12);
    assert!((ev[2] - (delta / 2.0 + p.g)).abs() < 1e-12);
}

#[test]
fn excited_spin_oscillates_with_the_cavity() {
    let mut p = DriveParams::new(1, 2.0, 0.0).with_delta_s(2.0);
    p.g = 0.5;
    let cutoff = 8;
    let full = build_full_rot_model(1, cutoff, &p).unwrap();
    // spin up (m = +1/2 is index 1), cavity vacuum
    let psi0 = PureState::basis_state(Basis::SpinFock { two_j: 1, cutoff }, cutoff);
    let times = [0.4, 1.3, 2.9];
    let tr = evolve_pure(
        PureHamiltonian::Static(&full.hamiltonian),
        &psi0,
        &times,
        &IntegratorOptions::pure_default().with_tolerances(1e-11, 1e-13),
    )
    .unwrap();
    for (t, psi) in times.iter().zip(&tr.states) {
        let sz = full.spin[2].expectation(psi).unwrap().re;
        let want = 0.5 * (2.0 * p.g * t).cos();
        assert!((sz - want).abs() < 1e-8, "t = {t}: {sz} vs {want}");
    }
}

#[test]
fn two_spin_superradiant_cascade() {
    let gamma: f64 = 0.8;
    let space = SpinSpace::new(2).unwrap();
    let l = BlockLindbladian::new(&space, 0.0, |ops| {
        Ok((Operator::zeros(ops.basis()), vec![ops.sm.scale_re(gamma.sqrt())]))
    })
    .unwrap();
    let mut rho0 = BlockDensityMatrix::zeros(&space);
    // top of the triplet: index m + j = 2
    rho0.block_mut(0)[2 * 3 + 2] = C64::new(1.0, 0.0);
    let times = [0.2, 0.7, 1.5, 4.0];
    let opts = LindbladOptions {
        integrator: IntegratorOptions::lindblad_default().with_tolerances(1e-11, 1e-13),
        ..LindbladOptions::default()
    };
    let tr = evolve_lindblad(&l, &rho0, &times, &opts).unwrap();
    for (t, m) in times.iter().zip(&tr.moments) {
        let x = 2.0 * gamma * t;
        let p_top = (-x).exp();
        let p_mid = x * (-x).exp();
        let want = p_top - (1.0 - p_top - p_mid);
        assert!((m.mean[2] - want).abs() < 1e-8, "t = {t}: {} vs {want}", m.mean[2]);
    }
}

#[test]
fn singlet_population_is_dark() {
    let space = SpinSpace::new(2).unwrap();
    let l = BlockLindbladian::new(&space, 0.0, |ops| {
        Ok((Operator::zeros(ops.basis()), vec![ops.sm.scale_re(1.0)]))
    })
    .unwrap();
    let rho0 = BlockDensityMatrix::maximally_mixed(&space);
    let opts = LindbladOptions::default();
    let tr = evolve_lindblad(&l, &rho0, &[30.0], &opts).unwrap();
    let pops = tr.final_state.populations();
    assert!((pops[1] - 0.25).abs() < 1e-9, "{pops:?}");
    assert!((tr.moments[0].mean[2] + 0.75).abs() < 1e-6);
}

fn random_state(n: usize, amps: &[(f64, f64)]) -> PureState {
    PureState::new(
        Basis::Dicke { two_j: n as u32 },
        DVector::from_iterator(n + 1, amps.iter().map(|&(a, b)| C64::new(a, b))),
    )
    .normalized()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn squeezing_is_invariant_under_global_rotations(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
        axis in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        angle in -3.2f64..3.2,
    ) {
        let n = 6;
        let mut a = amps.clone();
        a[6].0 += 1.5;
        let psi = random_state(n, &a);
        let norm = (axis.0 * axis.0 + axis.1 * axis.1 + axis.2 * axis.2).sqrt();
        prop_assume!(norm > 0.1);
        let u = rotation(&block_operators(n as u32), [axis.0 / norm, axis.1 / norm, axis.2 / norm], angle);
        let before = xi_r2(&spin_moments(&psi), n);
        let after = xi_r2(&spin_moments(&u.apply(&psi).unwrap()), n);
        prop_assume!(before.is_ok());
        let (b, a) = (before.unwrap(), after.unwrap());
        prop_assert!((a - b).abs() < 1e-9 * b.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn minimal_variance_bounds_every_perpendicular_direction(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7),
        theta in -3.2f64..3.2,
    ) {
        let n = 6;
        let mut a = amps.clone();
        a[0].1 += 1.2;
        let m = spin_moments(&random_state(n, &a));
        let pv = min_perpendicular_variance(&m, n);
        prop_assume!(pv.is_ok());
        let pv = pv.unwrap();
        let e = [
            theta.cos() * pv.e1[0] + theta.sin() * pv.e2[0],
            theta.cos() * pv.e1[1] + theta.sin() * pv.e2[1],
            theta.cos() * pv.e1[2] + theta.sin() * pv.e2[2],
        ];
        let v = m.variance_along(e);
        prop_assert!(pv.var_min <= v + 1e-10);
        prop_assert!(v <= pv.var_max + 1e-10);
        prop_assert!((m.variance_along(pv.direction()) - pv.var_min).abs() < 1e-9);
        // uncertainty relation for the two perpendicular components
        prop_assert!(pv.var_min * pv.var_max >= m.mean_length().powi(2) / 4.0 - 1e-9);
    }
}

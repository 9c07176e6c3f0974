//! Block master equation against the full product-space master equation.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spinsq::dynamics::{
    evolve_bruteforce, evolve_lindblad, product_space_model, BlockDensityMatrix, BlockLindbladian, LindbladOptions,
};
use spinsq::linalg::{Basis, PureState, C64};
use spinsq::model::{DriveParams, EffectiveParams};
use spinsq::ode::IntegratorOptions;
use spinsq::product::dicke_embedding;
use spinsq::spin::SpinSpace;

fn params(n: usize, e_beta: f64, ratio: f64, kappa: f64, gamma_phi: f64, delta_s: f64) -> EffectiveParams {
    let d = DriveParams::from_target(n, e_beta, ratio)
        .unwrap()
        .with_dissipation(kappa, gamma_phi)
        .with_delta_s(delta_s);
    EffectiveParams::from_drive(&d).unwrap()
}

fn compare(n: usize, p: &EffectiveParams, gamma_phi: f64, amps: &[(f64, f64)], times: &[f64]) -> f64 {
    let space = SpinSpace::new(n).unwrap();
    let psi = PureState::new(
        Basis::Dicke { two_j: n as u32 },
        DVector::from_iterator(n + 1, amps.iter().map(|&(a, b)| C64::new(a, b))),
    )
    .normalized();
    let opts = IntegratorOptions::lindblad_default().with_tolerances(1e-10, 1e-12);
    let block = BlockLindbladian::from_effective(&space, p, gamma_phi).unwrap();
    let rho0 = BlockDensityMatrix::from_pure(&space, &psi).unwrap();
    let lopts = LindbladOptions {
        integrator: opts,
        ..LindbladOptions::default()
    };
    let a = evolve_lindblad(&block, &rho0, times, &lopts).unwrap();

    let (h, jumps) = product_space_model(p, gamma_phi).unwrap();
    let e = dicke_embedding(n);
    let v = &e * psi.amplitudes();
    let rho_prod: DMatrix<C64> = &v * v.adjoint();
    let b = evolve_bruteforce(&h, &jumps, &rho_prod, times, &opts).unwrap();

    let mut worst: f64 = 0.0;
    for (ma, mb) in a.moments.iter().zip(&b.moments) {
        for i in 0..3 {
            worst = worst.max((ma.mean[i] - mb.mean[i]).abs());
            for j in 0..3 {
                worst = worst.max((ma.second[i][j] - mb.second[i][j]).abs());
            }
        }
    }
    worst
}

#[test]
fn pure_dephasing_matches_product_space() {
    for n in 1..=5 {
        let p = params(n, 10.0, 0.0, 0.0, 0.0, 0.0);
        let amps: Vec<(f64, f64)> = (0..=n).map(|k| (1.0 + k as f64, 0.3 * k as f64)).collect();
        let err = compare(n, &p, 0.7, &amps, &[0.3, 1.0, 2.5]);
        assert!(err < 1e-7, "n = {n}: {err}");
    }
}

#[test]
fn full_dissipative_model_matches_product_space() {
    let p = params(4, 5.0, 1.0 / 3.0, 2.0, 0.4, 0.9);
    let amps = [(0.2, 0.1), (1.0, 0.0), (0.4, -0.3), (0.0, 0.5), (0.7, 0.2)];
    let err = compare(4, &p, 0.4, &amps, &[0.5, 1.5, 4.0]);
    assert!(err < 1e-7, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_models_match_product_space(
        n in 2usize..=4,
        e_beta in 2.0f64..20.0,
        ratio in -0.8f64..0.8,
        kappa in 0.0f64..3.0,
        gamma_phi in 0.0f64..1.0,
        delta_s in -1.0f64..1.0,
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
    ) {
        let p = params(n, e_beta, ratio, kappa, gamma_phi, delta_s);
        let mut a = amps[..=n].to_vec();
        a[0].0 += 0.1;
        let err = compare(n, &p, gamma_phi, &a, &[0.4, 1.2]);
        prop_assert!(err < 1e-6, "n = {}: {}", n, err);
    }
}

#[test]
fn strong_decay_matches_product_space_at_long_times() {
    let p = params(6, 6f64.sqrt(), 0.0, 10.0, 0.02, 1.0 / 6f64.sqrt());
    let amps: Vec<(f64, f64)> = (0..=6).map(|k| (1.0 / (1.0 + k as f64), 0.1 * k as f64)).collect();
    let err = compare(6, &p, 0.02, &amps, &[2.0, 10.0, 30.0]);
    assert!(err < 1e-7, "{err}");
}

#[test]
fn anti_hermitian_roundoff_is_not_amplified() {
    let n = 20;
    let e_beta = (n as f64).sqrt();
    let p = params(n, e_beta, 0.0, 10.0, 0.02, 1.0 / e_beta);
    let space = SpinSpace::new(n).unwrap();
    let l = BlockLindbladian::from_effective(&space, &p, 0.02).unwrap();
    let psi = PureState::new(
        Basis::Dicke { two_j: n as u32 },
        DVector::from_iterator(n + 1, (0..=n).map(|k| C64::new(1.0, 0.05 * k as f64))),
    )
    .normalized();
    let mut rho0 = BlockDensityMatrix::from_pure(&space, &psi).unwrap();
    let d = n + 1;
    let top = rho0.block_mut(0);
    top[1] += C64::new(1e-10, 0.0);
    top[d] -= C64::new(1e-10, 0.0);
    let opts = LindbladOptions {
        integrator: IntegratorOptions::lindblad_default(),
        check_positivity: true,
        ..LindbladOptions::default()
    };
    let tr = evolve_lindblad(&l, &rho0, &[1.0, 3.0, 6.0], &opts).unwrap();
    assert!(tr.min_eigenvalue > -1e-6, "{}", tr.min_eigenvalue);
    assert!(tr.final_state.hermiticity_error() < 1e-10, "{}", tr.final_state.hermiticity_error());
    for m in &tr.moments {
        let r = (m.mean[0].powi(2) + m.mean[1].powi(2) + m.mean[2].powi(2)).sqrt();
        assert!(r <= n as f64 / 2.0 + 1e-8, "{r}");
    }
}

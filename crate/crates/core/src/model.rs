//! Drive parameters, the Bogoliubov mapping, and every Hamiltonian and jump
//! operator of the parametrically driven cavity + spin ensemble.
//!
//! Frequencies are in units of the single-spin coupling `g` (normally 1) and
//! `hbar = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Basis, Operator, PureState, C64, ZERO};
use crate::spin::{block_operators, sigma_operator, SpinOperators};

/// Physical knobs of the rotating-frame model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub delta_c: f64,
    pub delta_s: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma_phi: f64,
    pub n_spins: usize,
}

impl DriveParams {
    pub fn new(n_spins: usize, delta_c: f64, lambda: f64) -> Self {
        Self {
            delta_c,
            delta_s: 0.0,
            lambda_re: lambda,
            lambda_im: 0.0,
            g: 1.0,
            kappa: 0.0,
            gamma_phi: 0.0,
            n_spins,
        }
    }

    /// Drive realizing a target Bogoliubov energy and `lambda / delta_c` ratio.
    pub fn from_target(n_spins: usize, e_beta: f64, lambda_ratio: f64) -> Result<Self> {
        if !(lambda_ratio.abs() < 1.0) {
            return Err(Error::UnstableDrive { delta_c: 1.0, lambda: lambda_ratio });
        }
        let r = 0.5 * lambda_ratio.atanh();
        let (delta_c, lambda) = drive_from_target(e_beta, r)?;
        Ok(Self::new(n_spins, delta_c, lambda))
    }

    pub fn with_dissipation(mut self, kappa: f64, gamma_phi: f64) -> Self {
        self.kappa = kappa;
        self.gamma_phi = gamma_phi;
        self
    }

    pub fn with_delta_s(mut self, delta_s: f64) -> Self {
        self.delta_s = delta_s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 {
            return Err(Error::InvalidParameter("n_spins must be positive".into()));
        }
        if !(self.kappa >= 0.0) || !(self.gamma_phi >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rates must be non-negative (kappa = {}, gamma_phi = {})",
                self.kappa, self.gamma_phi
            )));
        }
        if !(self.lambda_re.abs() < self.delta_c.abs()) {
            return Err(Error::UnstableDrive {
                delta_c: self.delta_c,
                lambda: self.lambda_re,
            });
        }
        Ok(())
    }
}

/// Squeeze parameter and energy of the cavity Bogoliubov mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bogoliubov {
    pub r: f64,
    pub e_beta: f64,
}

/// `tanh 2r = lambda / delta_c`, `E_beta = delta_c sech 2r`.
pub fn bogoliubov_from_drive(delta_c: f64, lambda: f64) -> Result<Bogoliubov> {
    if !(lambda.abs() < delta_c.abs()) {
        return Err(Error::UnstableDrive { delta_c, lambda });
    }
    let r = 0.5 * (lambda / delta_c).atanh();
    let e_beta = delta_c.signum() * (delta_c * delta_c - lambda * lambda).sqrt();
    Ok(Bogoliubov { r, e_beta })
}

/// Inverse of [`bogoliubov_from_drive`]: `(E cosh 2r, E sinh 2r)`.
pub fn drive_from_target(e_beta: f64, r: f64) -> Result<(f64, f64)> {
    if !(e_beta > 0.0) {
        return Err(Error::InvalidParameter(format!("E_beta must be positive, got {e_beta}")));
    }
    Ok((e_beta * (2.0 * r).cosh(), e_beta * (2.0 * r).sinh()))
}

/// Derived quantities of the effective spin model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub r: f64,
    pub e_beta: f64,
    pub chi: f64,
    pub chi_tilde: f64,
    pub delta_tilde: f64,
    pub gamma_big: f64,
    pub cooperativity: f64,
    pub delta_s: f64,
    pub n_spins: usize,
}

impl EffectiveParams {
    pub fn from_drive(p: &DriveParams) -> Result<Self> {
        p.validate()?;
        let b = bogoliubov_from_drive(p.delta_c, p.lambda_re)?;
        let chi = p.g * p.g / b.e_beta;
        let cooperativity = if p.kappa > 0.0 && p.gamma_phi > 0.0 {
            p.n_spins as f64 * p.g * p.g / (p.kappa * p.gamma_phi)
        } else {
            f64::INFINITY
        };
        Ok(Self {
            r: b.r,
            e_beta: b.e_beta,
            chi,
            chi_tilde: chi * (2.0 * b.r).cosh(),
            delta_tilde: p.delta_s - chi,
            gamma_big: p.kappa * chi / b.e_beta,
            cooperativity,
            delta_s: p.delta_s,
            n_spins: p.n_spins,
        })
    }

    pub fn tanh_2r(&self) -> f64 {
        (2.0 * self.r).tanh()
    }
}

/// `r_0` with `tanh 2 r_0 = 1/3`, the induced two-axis-twist point.
pub fn itat_r0() -> f64 {
    0.5 * (1.0f64 / 3.0).atanh()
}

fn sq(op: &Operator) -> Operator {
    op.mul(op).expect("same block")
}

/// `Delta~ Sz - chi~ [(S^2 - Sz^2) - tanh 2r (Sx^2 - Sy^2)]` on one Dicke block.
pub fn effective_hamiltonian(ops: &SpinOperators, params: &EffectiveParams) -> Operator {
    let t = params.tanh_2r();
    let (sx2, sy2, sz2) = (sq(&ops.sx), sq(&ops.sy), sq(&ops.sz));
    let ct = params.chi_tilde;
    Operator::combine(&[
        (params.delta_tilde, &ops.sz),
        (-ct, &ops.s2),
        (ct, &sz2),
        (ct * t, &sx2),
        (-ct * t, &sy2),
    ])
    .expect("same block")
}

/// The same Hamiltonian written as `-chi Sigma^dag Sigma + Delta_s Sz`.
pub fn effective_hamiltonian_sigma_form(ops: &SpinOperators, params: &EffectiveParams) -> Operator {
    let s = sigma_operator(ops, params.r);
    let sds = s.dagger().mul(&s).expect("same block");
    Operator::combine(&[(-params.chi, &sds), (params.delta_s, &ops.sz)]).expect("same block")
}

/// Effective Hamiltonian on the symmetric `j = N/2` block.
pub fn build_effective_hamiltonian(params: &DriveParams) -> Result<(Operator, EffectiveParams)> {
    let eff = EffectiveParams::from_drive(params)?;
    let ops = block_operators(params.n_spins as u32);
    Ok((effective_hamiltonian(&ops, &eff), eff))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    /// `lambda = 0`: cavity-mediated one-axis twist about z.
    OatZ,
    /// `lambda = delta_c / 3`, `Delta_s = chi`: two-axis twist in the y-z plane.
    Itat,
    /// `lambda = -delta_c / 3`: the equivalent twist in the z-x plane.
    ItatZx,
    /// Large `lambda` (from the base drive), `Delta_s = 0`: twist about y.
    OatY,
    /// Large `lambda` with the base `Delta_s` kept: twist-and-turn.
    TwistAndTurn,
    /// Base drive used as given.
    Custom,
}

#[derive(Clone, Debug)]
pub struct PresetOptions {
    /// Shift `Delta_s` by `chi sinh^2 r` to cancel the mean dispersive term.
    pub dispersive_shift: bool,
    /// Warn for `oat_y` when `exp(-2r)` exceeds this.
    pub oat_y_threshold: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            dispersive_shift: false,
            oat_y_threshold: 0.1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub hamiltonian: Operator,
    pub drive: DriveParams,
    pub params: EffectiveParams,
    pub warnings: Vec<String>,
}

/// Resolve a preset against a base drive (which supplies `delta_c` and `g`).
pub fn resolve_preset(kind: PresetKind, base: &DriveParams, opts: &PresetOptions) -> Result<(DriveParams, Vec<String>)> {
    let mut drive = *base;
    let mut warnings = Vec::new();
    let chi_for = |d: &DriveParams| -> Result<f64> {
        let b = bogoliubov_from_drive(d.delta_c, d.lambda_re)?;
        Ok(d.g * d.g / b.e_beta)
    };
    match kind {
        PresetKind::OatZ => drive.lambda_re = 0.0,
        PresetKind::Itat | PresetKind::ItatZx => {
            let sign = if kind == PresetKind::Itat { 1.0 } else { -1.0 };
            drive.lambda_re = sign * base.delta_c / 3.0;
            let chi = chi_for(&drive)?;
            let shift = if opts.dispersive_shift { itat_r0().sinh().powi(2) } else { 0.0 };
            drive.delta_s = chi * (1.0 + shift);
        }
        PresetKind::OatY => {
            drive.delta_s = 0.0;
        }
        PresetKind::TwistAndTurn | PresetKind::Custom => {}
    }
    if matches!(kind, PresetKind::OatY | PresetKind::TwistAndTurn) {
        let b = bogoliubov_from_drive(drive.delta_c, drive.lambda_re)?;
        if (-2.0 * b.r).exp() > opts.oat_y_threshold {
            warnings.push(format!(
                "approximation: exp(-2r) = {:.3} exceeds {:.3}; the y-axis twist is not dominant",
                (-2.0 * b.r).exp(),
                opts.oat_y_threshold
            ));
        }
    }
    Ok((drive, warnings))
}

pub fn build_preset(kind: PresetKind, base: &DriveParams, opts: &PresetOptions) -> Result<Preset> {
    let (drive, warnings) = resolve_preset(kind, base, opts)?;
    let (hamiltonian, params) = build_effective_hamiltonian(&drive)?;
    Ok(Preset {
        hamiltonian,
        drive,
        params,
        warnings,
    })
}

/// `z[r] = exp(-2r) Sx - i exp(2r) Sy`.
pub fn z_jump(ops: &SpinOperators, r: f64) -> Operator {
    let a = ops.sx.scale_re((-2.0 * r).exp());
    let b = ops.sy.scale(C64::new(0.0, -(2.0 * r).exp()));
    a.add(&b).expect("same block")
}

/// Marker for uniform single-spin dephasing `(gamma_phi / 2) sum_k D[sigma_z^k]`;
/// materialized by the dynamics engine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDephasing {
    pub gamma_phi: f64,
}

#[derive(Clone, Debug)]
pub struct JumpOperators {
    /// `sqrt(Gamma) z[r]` on the given block.
    pub collective: Operator,
    pub gamma_big: f64,
    pub local_dephasing: LocalDephasing,
}

pub fn build_jump_operators(ops: &SpinOperators, params: &EffectiveParams, gamma_phi: f64) -> JumpOperators {
    JumpOperators {
        collective: z_jump(ops, params.r).scale_re(params.gamma_big.sqrt()),
        gamma_big: params.gamma_big,
        local_dephasing: LocalDephasing { gamma_phi },
    }
}

/// Default Fock truncation `max(12, ceil(6 sinh^2 r + 6))`.
pub fn default_fock_cutoff(r: f64) -> usize {
    let c = (6.0 * r.sinh().powi(2) + 6.0).ceil() as usize;
    c.max(12)
}

fn annihilation(cutoff: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Full rotating-frame spin + cavity model on a Dicke block times Fock space.
#[derive(Clone, Debug)]
pub struct FullModel {
    pub hamiltonian: Operator,
    /// Cavity annihilation operator (for the `kappa D[c]` dissipator).
    pub cavity: Operator,
    pub spin: [Operator; 3],
    pub cutoff: usize,
}

pub fn build_full_rot_model(two_j: u32, cutoff: usize, p: &DriveParams) -> Result<FullModel> {
    if cutoff < 8 {
        return Err(Error::InvalidParameter(format!("Fock cutoff must be at least 8, got {cutoff}")));
    }
    if !(p.lambda_re.hypot(p.lambda_im) < p.delta_c.abs()) {
        return Err(Error::UnstableDrive {
            delta_c: p.delta_c,
            lambda: p.lambda_re.hypot(p.lambda_im),
        });
    }
    let basis = Basis::SpinFock { two_j, cutoff };
    let ops = block_operators(two_j);
    let ds = ops.sx.dim();
    let id_s = DMatrix::<C64>::identity(ds, ds);
    let id_f = DMatrix::<C64>::identity(cutoff, cutoff);
    let a = annihilation(cutoff);
    let ad = a.adjoint();
    let n = &ad * &a;
    let lam = C64::new(p.lambda_re, p.lambda_im);
    let half = C64::new(0.5, 0.0);
    let g = C64::new(p.g, 0.0);
    let h = kron(&id_s, &n) * C64::new(p.delta_c, 0.0)
        + kron(ops.sz.matrix(), &id_f) * C64::new(p.delta_s, 0.0)
        + (kron(ops.sm.matrix(), &ad) + kron(ops.sp.matrix(), &a)) * g
        + kron(&id_s, &(&a * &a)) * (lam * half)
        + kron(&id_s, &(&ad * &ad)) * (lam.conj() * half);
    let spin = [
        Operator::new(basis, kron(ops.sx.matrix(), &id_f)),
        Operator::new(basis, kron(ops.sy.matrix(), &id_f)),
        Operator::new(basis, kron(ops.sz.matrix(), &id_f)),
    ];
    Ok(FullModel {
        hamiltonian: Operator::new(basis, h),
        cavity: Operator::new(basis, kron(&id_s, &a)),
        spin,
        cutoff,
    })
}

/// Total population in the two highest Fock levels of a spin-Fock state;
/// above `1e-6` the truncation is suspect.
pub fn fock_tail_population(state: &PureState) -> f64 {
    let Basis::SpinFock { two_j, cutoff } = state.basis() else {
        return 0.0;
    };
    let amps = state.amplitudes();
    (0..=two_j as usize)
        .flat_map(|s| [s * cutoff + cutoff - 1, s * cutoff + cutoff - 2])
        .map(|i| amps[i].norm_sqr())
        .sum()
}

pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Dispersive coupling `-chi Sz (beta^dag beta)` on a Dicke block times the
/// Bogoliubov-mode Fock space.
pub fn build_dispersive_term(two_j: u32, cutoff: usize, chi: f64) -> Operator {
    let ops = block_operators(two_j);
    let a = annihilation(cutoff);
    let n = a.adjoint() * &a;
    Operator::new(
        Basis::SpinFock { two_j, cutoff },
        kron(ops.sz.matrix(), &n) * C64::new(-chi, 0.0),
    )
}

/// The cavity vacuum expressed in the Bogoliubov mode `beta`: a squeezed
/// vacuum with parameter `r`, amplitudes only on even Fock states.
pub fn squeezed_vacuum(cutoff: usize, r: f64) -> DVector<C64> {
    let t = r.tanh();
    let mut v = DVector::from_element(cutoff, ZERO);
    // (cosh r beta - sinh r beta^dag)|psi> = 0
    let mut amp = 1.0 / r.cosh().sqrt();
    v[0] = C64::new(amp, 0.0);
    let mut n = 2;
    while n < cutoff {
        amp *= t * ((n - 1) as f64).sqrt() / (n as f64).sqrt();
        v[n] = C64::new(amp, 0.0);
        n += 2;
    }
    v
}

/// Fock-number distribution of [`squeezed_vacuum`], truncated once the
/// remaining tail is below `tail`.
pub fn squeezed_vacuum_populations(r: f64, tail: f64) -> Vec<(usize, f64)> {
    let t2 = r.tanh().powi(2);
    let mut out = Vec::new();
    let mut p = 1.0 / r.cosh();
    let mut n = 0usize;
    let mut total = 0.0;
    loop {
        out.push((n, p));
        total += p;
        if 1.0 - total < tail || n > 10_000 {
            break;
        }
        p *= t2 * ((n + 1) as f64) / ((n + 2) as f64);
        n += 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diff(a: &Operator, b: &Operator) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn bogoliubov_limits() {
        let b = bogoliubov_from_drive(7.0, 0.0).unwrap();
        assert_eq!(b.r, 0.0);
        assert_eq!(b.e_beta, 7.0);

        let dc = 9.0;
        let b = bogoliubov_from_drive(dc, dc / 3.0).unwrap();
        assert_relative_eq!((2.0 * b.r).tanh(), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!((2.0 * b.r).exp(), 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(b.e_beta, 2.0 * 2f64.sqrt() / 3.0 * dc, epsilon = 1e-13);
        assert!((b.r.sinh().powi(2) - 0.0304).abs() < 1e-4);

        assert!(matches!(bogoliubov_from_drive(1.0, 1.0), Err(Error::UnstableDrive { .. })));
        assert!(matches!(bogoliubov_from_drive(1.0, -1.5), Err(Error::UnstableDrive { .. })));
    }

    #[test]
    fn drive_target_inverse() {
        let (dc, lam) = drive_from_target(3.0, 0.0).unwrap();
        assert_eq!((dc, lam), (3.0, 0.0));
        let (dc, lam) = drive_from_target(5.0, itat_r0()).unwrap();
        assert_relative_eq!(lam / dc, 1.0 / 3.0, epsilon = 1e-15);
        assert!(drive_from_target(0.0, 1.0).is_err());
    }

    #[test]
    fn effective_params_consistency() {
        let p = DriveParams::from_target(10, 20.0, 1.0 / 3.0).unwrap().with_dissipation(10.0, 0.02);
        let e = EffectiveParams::from_drive(&p).unwrap();
        assert_relative_eq!(e.e_beta, 20.0, epsilon = 1e-12);
        assert_relative_eq!(e.tanh_2r(), p.lambda_re / p.delta_c, epsilon = 1e-12);
        assert_relative_eq!(e.chi, 1.0 / 20.0, epsilon = 1e-12);
        assert_relative_eq!(e.gamma_big, 10.0 * (1.0 / 20.0) / 20.0, epsilon = 1e-14);
        assert_relative_eq!(e.cooperativity, 10.0 / (10.0 * 0.02), epsilon = 1e-12);
    }

    #[test]
    fn oat_limit_of_effective_hamiltonian() {
        let p = DriveParams::new(6, 4.0, 0.0);
        let (h, e) = build_effective_hamiltonian(&p).unwrap();
        let ops = block_operators(6);
        let want = Operator::combine(&[(-e.chi, &ops.s2), (e.chi, &sq(&ops.sz)), (-e.chi, &ops.sz)]).unwrap();
        assert!(diff(&h, &want) < 1e-13);
    }

    #[test]
    fn itat_form() {
        let base = DriveParams::new(8, 12.0, 0.0);
        let preset = build_preset(PresetKind::Itat, &base, &PresetOptions::default()).unwrap();
        assert_relative_eq!(preset.params.tanh_2r(), 1.0 / 3.0, epsilon = 1e-14);
        assert!(preset.params.delta_tilde.abs() < 1e-15);
        let ops = block_operators(8);
        let ct = preset.params.chi_tilde;
        let want = Operator::combine(&[(-2.0 * ct / 3.0, &ops.s2), (2.0 * ct / 3.0, &sq(&ops.sz)), (-2.0 * ct / 3.0, &sq(&ops.sy))]).unwrap();
        assert!(diff(&preset.hamiltonian, &want) < 1e-12);
    }

    #[test]
    fn itat_zx_twists_in_the_other_plane() {
        let base = DriveParams::new(6, 12.0, 0.0);
        let preset = build_preset(PresetKind::ItatZx, &base, &PresetOptions::default()).unwrap();
        let ops = block_operators(6);
        let ct = preset.params.chi_tilde;
        let want = Operator::combine(&[(-2.0 * ct / 3.0, &ops.s2), (2.0 * ct / 3.0, &sq(&ops.sz)), (-2.0 * ct / 3.0, &sq(&ops.sx))]).unwrap();
        assert!(diff(&preset.hamiltonian, &want) < 1e-12);
    }

    #[test]
    fn single_spin_has_no_twist() {
        let p = DriveParams::new(1, 5.0, 2.0).with_delta_s(0.7);
        let (h, e) = build_effective_hamiltonian(&p).unwrap();
        let ops = block_operators(1);
        let rest = h.sub(&ops.sz.scale_re(e.delta_tilde)).unwrap();
        let m = rest.matrix();
        assert!(m[(0, 1)].norm() < 1e-15);
        assert!((m[(0, 0)] - m[(1, 1)]).norm() < 1e-14);
    }

    #[test]
    fn sigma_form_equivalence() {
        for (n, ratio, ds) in [(2usize, 0.1, 0.0), (5, 1.0 / 3.0, 0.3), (8, 0.9, -0.2)] {
            let p = DriveParams::from_target(n, 3.0, ratio).unwrap().with_delta_s(ds);
            let e = EffectiveParams::from_drive(&p).unwrap();
            let ops = block_operators(n as u32);
            let a = effective_hamiltonian(&ops, &e);
            let b = effective_hamiltonian_sigma_form(&ops, &e);
            assert!(diff(&a, &b) < 1e-10);
            assert!(a.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn oat_y_limit() {
        let r: f64 = 3.0;
        let base = DriveParams::new(10, 40.0, 40.0 * (2.0 * r).tanh());
        let preset = build_preset(PresetKind::OatY, &base, &PresetOptions::default()).unwrap();
        assert!(preset.warnings.is_empty());
        let ops = block_operators(10);
        let approx = sq(&ops.sy).scale_re(-preset.params.chi * (2.0 * r).exp());
        let rel = diff(&preset.hamiltonian, &approx) / preset.hamiltonian.max_abs();
        assert!(rel < (-2.0 * r).exp(), "relative deviation {rel}");

        let weak = DriveParams::new(10, 40.0, 4.0);
        let preset = build_preset(PresetKind::OatY, &weak, &PresetOptions::default()).unwrap();
        assert_eq!(preset.warnings.len(), 1);
    }

    #[test]
    fn oat_z_preset_matches_r_zero() {
        let base = DriveParams::new(4, 6.0, 2.0).with_delta_s(0.1);
        let preset = build_preset(PresetKind::OatZ, &base, &PresetOptions::default()).unwrap();
        let (h, _) = build_effective_hamiltonian(&DriveParams::new(4, 6.0, 0.0).with_delta_s(0.1)).unwrap();
        assert!(diff(&preset.hamiltonian, &h) < 1e-15);
    }

    #[test]
    fn jump_operators() {
        let ops = block_operators(4);
        assert!(diff(&z_jump(&ops, 0.0), &ops.sm) < 1e-15);
        let z = z_jump(&ops, itat_r0());
        let want = ops.sx.scale_re(std::f64::consts::FRAC_1_SQRT_2).add(&ops.sy.scale(C64::new(0.0, -2f64.sqrt()))).unwrap();
        assert!(diff(&z, &want) < 1e-14);
    }

    #[test]
    fn gamma_from_substitution() {
        // kappa = 10, g = 1, E_beta = 20
        let p = DriveParams::from_target(3, 20.0, 0.0).unwrap().with_dissipation(10.0, 0.1);
        let e = EffectiveParams::from_drive(&p).unwrap();
        assert_relative_eq!(e.gamma_big, 0.025, epsilon = 1e-15);
    }

    #[test]
    fn squeezed_vacuum_statistics() {
        let r = itat_r0();
        let v = squeezed_vacuum(40, r);
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-14);
        let mean: f64 = v.iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum();
        let second: f64 = v.iter().enumerate().map(|(n, a)| (n * n) as f64 * a.norm_sqr()).sum();
        assert!((mean - 0.03).abs() < 5e-4);
        assert_relative_eq!(mean, r.sinh().powi(2), epsilon = 1e-14);
        let var = second - mean * mean;
        assert!((var - 0.06).abs() < 5e-3);
        assert_relative_eq!(var, 2.0 * (r.sinh() * r.cosh()).powi(2), epsilon = 1e-13);
        let pops = squeezed_vacuum_populations(r, 1e-15);
        let total: f64 = pops.iter().map(|(_, p)| p).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
        for (n, p) in pops {
            assert_relative_eq!(p, v[n].norm_sqr(), epsilon = 1e-15);
        }
    }

    #[test]
    fn dispersive_term_vanishes_in_vacuum() {
        let d = build_dispersive_term(4, 10, 0.3);
        let ops = block_operators(4);
        let mut v = DVector::zeros(50);
        for s in 0..5 {
            v[s * 10] = C64::new(1.0 / (s as f64 + 1.0), 0.0);
        }
        let _ = ops;
        let out = d.matrix() * v;
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn full_model_is_hermitian() {
        let p = DriveParams::new(3, 5.0, 1.0).with_delta_s(0.2);
        let m = build_full_rot_model(3, 10, &p).unwrap();
        assert!(m.hamiltonian.hermiticity_error() < 1e-12);
        assert!(build_full_rot_model(3, 4, &p).is_err());
    }
}

//! Collective spin algebra for N spin-1/2 particles in the Dicke basis.
//!
//! Half-integers are carried as doubled integers (`two_j`, `two_m`). Inside a
//! block, basis index `i` corresponds to `m = -j + i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{Basis, Operator, PureState, C64, I, ONE, ZERO};

/// `ln k!` for k = 0..=n.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

fn binomial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k {
        c = c.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(c)
}

/// Multiplicity of total spin `j` among N spin-1/2 particles,
/// `C(N, N/2 - j) - C(N, N/2 - j - 1)`, as a float.
pub fn block_degeneracy(n_spins: usize, two_j: u32) -> f64 {
    let n = n_spins as u64;
    let k = (n - two_j as u64) / 2;
    if let (Some(a), Some(b)) = (
        binomial_exact(n, k),
        if k == 0 { Some(0) } else { binomial_exact(n, k - 1) },
    ) {
        return (a - b) as f64;
    }
    ln_block_degeneracy(n_spins, two_j).exp()
}

/// Natural log of [`block_degeneracy`], evaluated without overflow.
pub fn ln_block_degeneracy(n_spins: usize, two_j: u32) -> f64 {
    // d_j = C(N, N/2 - j) (2j + 1) / (N/2 + j + 1)
    let lf = ln_factorials(n_spins);
    let k = (n_spins - two_j as usize) / 2;
    let ln_binom = lf[n_spins] - lf[k] - lf[n_spins - k];
    ln_binom + ((two_j + 1) as f64).ln() - ((n_spins - k + 1) as f64).ln()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Block {
    pub two_j: u32,
    pub degeneracy: f64,
}

impl Block {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }
}

/// Hilbert-space bookkeeping for N spin-1/2 particles: the total-spin blocks
/// from `j = N/2` downwards with their multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSpace {
    n_spins: usize,
    blocks: Vec<Block>,
}

impl SpinSpace {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidParameter("need at least one spin".into()));
        }
        let blocks = (0..=n_spins / 2)
            .map(|k| {
                let two_j = (n_spins - 2 * k) as u32;
                Block {
                    two_j,
                    degeneracy: block_degeneracy(n_spins, two_j),
                }
            })
            .collect();
        Ok(Self { n_spins, blocks })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    /// Blocks ordered from `j = N/2` downwards.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn max_two_j(&self) -> u32 {
        self.n_spins as u32
    }

    pub fn block(&self, two_j: u32) -> Result<&Block> {
        self.blocks.iter().find(|b| b.two_j == two_j).ok_or(Error::BlockNotInSpace {
            n_spins: self.n_spins,
            two_j,
        })
    }

    pub fn contains(&self, two_j: u32) -> bool {
        self.block(two_j).is_ok()
    }

    /// Index of a block in [`SpinSpace::blocks`].
    pub fn block_index(&self, two_j: u32) -> Result<usize> {
        self.blocks.iter().position(|b| b.two_j == two_j).ok_or(Error::BlockNotInSpace {
            n_spins: self.n_spins,
            two_j,
        })
    }

    pub fn symmetric_basis(&self) -> Basis {
        Basis::Dicke { two_j: self.max_two_j() }
    }
}

/// The collective operators on one Dicke block.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub two_j: u32,
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub sp: Operator,
    pub sm: Operator,
    pub s2: Operator,
}

impl SpinOperators {
    pub fn basis(&self) -> Basis {
        Basis::Dicke { two_j: self.two_j }
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// `[sx, sy, sz]`.
    pub fn cartesian(&self) -> [&Operator; 3] {
        [&self.sx, &self.sy, &self.sz]
    }
}

/// `sqrt(j(j+1) - m(m+1))` with doubled arguments.
pub(crate) fn raising_coefficient(two_j: i64, two_m: i64) -> f64 {
    let v = (two_j * (two_j + 2) - two_m * (two_m + 2)) as f64 / 4.0;
    v.max(0.0).sqrt()
}

pub(crate) fn ladder_matrices(two_j: u32) -> (DMatrix<C64>, DMatrix<C64>) {
    let d = two_j as usize + 1;
    let mut sp = DMatrix::zeros(d, d);
    for i in 0..d - 1 {
        let two_m = -(two_j as i64) + 2 * i as i64;
        sp[(i + 1, i)] = C64::new(raising_coefficient(two_j as i64, two_m), 0.0);
    }
    let sm = sp.adjoint();
    (sp, sm)
}

pub fn build_spin_operators(space: &SpinSpace, two_j: u32) -> Result<SpinOperators> {
    space.block(two_j)?;
    Ok(block_operators(two_j))
}

/// Spin-j matrices without reference to an ensemble size.
pub fn block_operators(two_j: u32) -> SpinOperators {
    let d = two_j as usize + 1;
    let basis = Basis::Dicke { two_j };
    let (sp, sm) = ladder_matrices(two_j);
    let half = C64::new(0.5, 0.0);
    let sx = (&sp + &sm) * half;
    let sy = (&sp - &sm) * (-I * half);
    let sz = DMatrix::from_fn(d, d, |a, b| {
        if a == b {
            C64::new(-(two_j as f64) / 2.0 + a as f64, 0.0)
        } else {
            ZERO
        }
    });
    let j = two_j as f64 / 2.0;
    let s2 = DMatrix::identity(d, d) * C64::new(j * (j + 1.0), 0.0);
    SpinOperators {
        two_j,
        sx: Operator::new(basis, sx),
        sy: Operator::new(basis, sy),
        sz: Operator::new(basis, sz),
        sp: Operator::new(basis, sp),
        sm: Operator::new(basis, sm),
        s2: Operator::new(basis, s2),
    }
}

/// Spin Bogoliubov mode `cosh(r) S- - sinh(r) S+`.
pub fn sigma_operator(ops: &SpinOperators, r: f64) -> Operator {
    Operator::combine(&[(r.cosh(), &ops.sm), (-r.sinh(), &ops.sp)])
        .expect("operators share a block")
}

/// Spin coherent state pointing along polar angle `theta` and azimuth `phi`.
pub fn coherent_spin_state(space: &SpinSpace, two_j: u32, theta: f64, phi: f64) -> Result<PureState> {
    space.block(two_j)?;
    Ok(coherent_block_state(two_j, theta, phi))
}

pub(crate) fn coherent_block_state(two_j: u32, theta: f64, phi: f64) -> PureState {
    let d = two_j as usize + 1;
    let lf = ln_factorials(two_j as usize);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let amps = DVector::from_fn(d, |i, _| {
        // i = j + m spin-up quanta
        let up = i;
        let down = d - 1 - i;
        let ln_binom = 0.5 * (lf[d - 1] - lf[up] - lf[down]);
        let mag = pow_signed(c, up) * pow_signed(s, down);
        let m = -(two_j as f64) / 2.0 + i as f64;
        if mag == 0.0 {
            ZERO
        } else {
            C64::from_polar(mag.signum() * (ln_binom + mag.abs().ln()).exp(), -m * phi)
        }
    });
    PureState::new(Basis::Dicke { two_j }, amps).normalized()
}

// x^k with 0^0 = 1
fn pow_signed(x: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        x.powi(k as i32)
    }
}

/// Order in which the dark-state amplitude recursion is swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    /// From `m = -j` upwards.
    Upward,
    /// From `m = +j` downwards (requires `r > 0`).
    Downward,
}

/// The unique (even N) symmetric state annihilated by `Sigma[r]`.
pub fn dark_state(space: &SpinSpace, r: f64) -> Result<PureState> {
    dark_state_sweep(space, r, Sweep::Upward)
}

pub fn dark_state_sweep(space: &SpinSpace, r: f64, sweep: Sweep) -> Result<PureState> {
    let n = space.n_spins();
    if n % 2 == 1 {
        return Err(Error::NoDarkState(n));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("dark state needs r >= 0, got {r}")));
    }
    let two_j = space.max_two_j() as i64;
    let d = two_j as usize + 1;
    let basis = Basis::Dicke { two_j: two_j as u32 };
    if r == 0.0 {
        return Ok(PureState::basis_state(basis, 0));
    }
    let ln_t = r.tanh().ln();
    let kmax = (two_j / 2) as usize;
    // Sigma|psi> = 0 at row m+1 links a(m) and a(m+2):
    // a(m+2) / a(m) = tanh(r) * c-(m+1) / c+(m+1), all positive
    let ln_ratio = |k: usize| {
        let two_m = -two_j + 4 * k as i64;
        let c_minus = raising_coefficient(two_j, two_m); // c-(m+1) = c+(m)
        let c_plus = raising_coefficient(two_j, two_m + 2);
        ln_t + c_minus.ln() - c_plus.ln()
    };
    let mut ln_amp = vec![0.0; kmax + 1];
    match sweep {
        Sweep::Upward => {
            for k in 0..kmax {
                ln_amp[k + 1] = ln_amp[k] + ln_ratio(k);
            }
        }
        Sweep::Downward => {
            for k in (0..kmax).rev() {
                ln_amp[k] = ln_amp[k + 1] - ln_ratio(k);
            }
        }
    }
    let top = ln_amp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut amps = DVector::from_element(d, ZERO);
    let mut norm2 = 0.0;
    for (k, la) in ln_amp.iter().enumerate() {
        let a = (la - top).exp();
        norm2 += a * a;
        amps[2 * k] = C64::new(a, 0.0);
    }
    amps /= C64::new(norm2.sqrt(), 0.0);
    Ok(PureState::new(basis, amps))
}

/// `exp(-i pi Sx)` on a Dicke block: `|j,m> -> (-i)^{2j} |j,-m>`.
pub fn pi_x_rotation(two_j: u32) -> Operator {
    let d = two_j as usize + 1;
    let phase = (-I).powu(two_j);
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        m[(d - 1 - i, i)] = phase;
    }
    Operator::new(Basis::Dicke { two_j }, m)
}

/// `exp(-i angle (n . S))` on a Dicke block for a unit axis `n`.
pub fn rotation(ops: &SpinOperators, axis: [f64; 3], angle: f64) -> Operator {
    let gen = Operator::combine(&[(axis[0], &ops.sx), (axis[1], &ops.sy), (axis[2], &ops.sz)])
        .expect("operators share a block");
    let eig = crate::linalg::HermitianEigen::new(gen.matrix());
    let d = gen.dim();
    let mut u = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut e = DVector::zeros(d);
        e[col] = ONE;
        u.set_column(col, &eig.propagate(&e, angle));
    }
    Operator::new(gen.basis(), u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_diff(a: &Operator, b: &Operator) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn single_spin_pauli_algebra() {
        let space = SpinSpace::new(1).unwrap();
        let ops = build_spin_operators(&space, 1).unwrap();
        assert_relative_eq!(ops.sz.matrix()[(0, 0)].re, -0.5);
        assert_relative_eq!(ops.sz.matrix()[(1, 1)].re, 0.5);
        let comm = ops.sx.commutator(&ops.sy).unwrap();
        assert!(max_diff(&comm, &ops.sz.scale(I)) < 1e-15);
    }

    #[test]
    fn ladder_coefficient_for_spin_one() {
        let space = SpinSpace::new(2).unwrap();
        let ops = build_spin_operators(&space, 2).unwrap();
        let low = PureState::basis_state(ops.basis(), 0);
        let raised = ops.sp.apply(&low).unwrap();
        assert_relative_eq!(raised.amplitudes()[1].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(raised.amplitudes()[0], ZERO);
        assert_eq!(raised.amplitudes()[2], ZERO);
    }

    #[test]
    fn casimir_on_spin_two() {
        let space = SpinSpace::new(4).unwrap();
        let ops = build_spin_operators(&space, 4).unwrap();
        let want = Operator::identity(ops.basis()).scale_re(6.0);
        assert!(max_diff(&ops.s2, &want) < 1e-15);
        let sum = Operator::combine(&[(1.0, &ops.sx.mul(&ops.sx).unwrap()), (1.0, &ops.sy.mul(&ops.sy).unwrap()), (1.0, &ops.sz.mul(&ops.sz).unwrap())]).unwrap();
        assert!(max_diff(&sum, &want) < 1e-12);
    }

    #[test]
    fn block_outside_space_is_an_error() {
        let space = SpinSpace::new(4).unwrap();
        assert!(matches!(build_spin_operators(&space, 3), Err(Error::BlockNotInSpace { .. })));
        assert!(matches!(build_spin_operators(&space, 6), Err(Error::BlockNotInSpace { .. })));
    }

    #[test]
    fn block_structure() {
        let even = SpinSpace::new(6).unwrap();
        let two_js: Vec<u32> = even.blocks().iter().map(|b| b.two_j).collect();
        assert_eq!(two_js, vec![6, 4, 2, 0]);
        let odd = SpinSpace::new(5).unwrap();
        let two_js: Vec<u32> = odd.blocks().iter().map(|b| b.two_j).collect();
        assert_eq!(two_js, vec![5, 3, 1]);
        for n in 1..=12 {
            let s = SpinSpace::new(n).unwrap();
            assert_eq!(s.blocks()[0].degeneracy, 1.0);
            let total: f64 = s.blocks().iter().map(|b| b.degeneracy * b.dim() as f64).sum();
            assert_eq!(total, 2f64.powi(n as i32));
        }
    }

    #[test]
    fn log_degeneracy_agrees_with_exact() {
        for n in [7, 20, 41] {
            for two_j in (n % 2..=n).step_by(2) {
                let exact = block_degeneracy(n, two_j as u32);
                let via_log = ln_block_degeneracy(n, two_j as u32).exp();
                assert_relative_eq!(exact, via_log, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn sigma_at_zero_is_lowering() {
        let ops = block_operators(4);
        assert!(max_diff(&sigma_operator(&ops, 0.0), &ops.sm) < 1e-15);
    }

    #[test]
    fn sigma_commutator_is_two_sz() {
        for r in [0.0, 0.3, 1.7] {
            let ops = block_operators(6);
            let s = sigma_operator(&ops, r);
            let comm = s.dagger().commutator(&s).unwrap();
            assert!(max_diff(&comm, &ops.sz.scale_re(2.0)) < 1e-9 * (2.0 * r).cosh());
        }
    }

    #[test]
    fn sigma_kernel_for_two_spins() {
        let r: f64 = 1.0;
        let ops = block_operators(2);
        let t = r.tanh();
        let v = DVector::from_vec(vec![C64::new(1.0, 0.0), ZERO, C64::new(t, 0.0)]);
        let psi = PureState::new(ops.basis(), v).normalized();
        let out = sigma_operator(&ops, r).apply(&psi).unwrap();
        assert!(out.norm() < 1e-15);
    }

    #[test]
    fn coherent_states() {
        let space = SpinSpace::new(2).unwrap();
        let down = coherent_spin_state(&space, 2, std::f64::consts::PI, 0.7).unwrap();
        assert_relative_eq!(down.amplitudes()[0].norm(), 1.0, epsilon = 1e-15);
        let x = coherent_spin_state(&space, 2, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let want = [0.5, std::f64::consts::FRAC_1_SQRT_2, 0.5];
        for (a, w) in x.amplitudes().iter().zip(want) {
            assert_relative_eq!(a.re, w, epsilon = 1e-15);
            assert_relative_eq!(a.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn coherent_state_has_full_length() {
        let n = 9;
        let space = SpinSpace::new(n).unwrap();
        let ops = build_spin_operators(&space, n as u32).unwrap();
        for (theta, phi) in [(0.3, 1.1), (1.9, -2.0), (std::f64::consts::FRAC_PI_2, 0.0)] {
            let psi = coherent_spin_state(&space, n as u32, theta, phi).unwrap();
            let mean: Vec<f64> = ops.cartesian().iter().map(|op| op.expectation(&psi).unwrap().re).collect();
            let len = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert_relative_eq!(len, n as f64 / 2.0, epsilon = 1e-12);
            assert_relative_eq!(mean[2], n as f64 / 2.0 * theta.cos(), epsilon = 1e-12);
            assert_relative_eq!(mean[1], n as f64 / 2.0 * theta.sin() * phi.sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn dark_state_limits() {
        let space = SpinSpace::new(2).unwrap();
        let r: f64 = 0.8;
        let psi = dark_state(&space, r).unwrap();
        let t = r.tanh();
        let norm = (1.0 + t * t).sqrt();
        assert_relative_eq!(psi.amplitudes()[0].re, 1.0 / norm, epsilon = 1e-14);
        assert_relative_eq!(psi.amplitudes()[2].re, t / norm, epsilon = 1e-14);

        let space = SpinSpace::new(10).unwrap();
        let zero = dark_state(&space, 0.0).unwrap();
        assert_eq!(zero.amplitudes()[0], ONE);

        assert!(matches!(dark_state(&SpinSpace::new(7).unwrap(), 1.0), Err(Error::NoDarkState(7))));
    }

    #[test]
    fn dark_state_is_annihilated_and_sweeps_agree() {
        for (n, r) in [(4usize, 0.4), (20, 4.0), (40, 4.0), (200, 6.0)] {
            let space = SpinSpace::new(n).unwrap();
            let up = dark_state_sweep(&space, r, Sweep::Upward).unwrap();
            let down = dark_state_sweep(&space, r, Sweep::Downward).unwrap();
            assert!((up.amplitudes() - down.amplitudes()).norm() < 1e-8);
            let ops = block_operators(n as u32);
            // residual relative to the operator scale
            let res = sigma_operator(&ops, r).apply(&up).unwrap().norm();
            assert!(res < 1e-10 * r.cosh() * n as f64, "N={n} r={r} residual {res}");
        }
    }

    #[test]
    fn pi_rotation_matches_generator() {
        let ops = block_operators(5);
        let exact = rotation(&ops, [1.0, 0.0, 0.0], std::f64::consts::PI);
        assert!(max_diff(&exact, &pi_x_rotation(5)) < 1e-12);
    }
}

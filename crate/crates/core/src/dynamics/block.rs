use nalgebra::DMatrix;

use super::lindblad::{DenseLindbladian, Scratch};
use crate::error::{Error, Result};
use crate::linalg::{Basis, HermitianEigen, Operator, PureState, C64, ZERO};
use crate::metrics::{MomentOperators, SpinMoments};
use crate::model::{effective_hamiltonian, z_jump, EffectiveParams};
use crate::ode::{dopri5, check_time_grid, IntegratorOptions, IntegratorStats};
use crate::spin::{block_operators, ln_block_degeneracy, SpinOperators, SpinSpace};

/// Minimum block eigenvalue below which a run is flagged.
pub const POSITIVITY_GUARD: f64 = -1e-7;
/// Minimum block eigenvalue below which a run is aborted.
pub const POSITIVITY_FAILURE: f64 = -1e-5;
const TRACE_TOLERANCE: f64 = 1e-8;

/// Permutation-invariant density matrix `rho = sum_j rho^j (x) 1_{d_j}`,
/// stored as one `(2j+1) x (2j+1)` block per total spin `j` (the state of each
/// of the `d_j` identical copies). `tr rho = sum_j d_j tr rho^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDensityMatrix {
    n_spins: usize,
    two_js: Vec<u32>,
    degeneracies: Vec<f64>,
    offsets: Vec<usize>,
    data: Vec<C64>,
}

impl BlockDensityMatrix {
    pub fn zeros(space: &SpinSpace) -> Self {
        let mut offsets = vec![0];
        for b in space.blocks() {
            offsets.push(offsets.last().unwrap() + b.dim() * b.dim());
        }
        Self {
            n_spins: space.n_spins(),
            two_js: space.blocks().iter().map(|b| b.two_j).collect(),
            degeneracies: space.blocks().iter().map(|b| b.degeneracy).collect(),
            data: vec![ZERO; *offsets.last().unwrap()],
            offsets,
        }
    }

    /// A pure state living in one block, normalized over the whole space by
    /// spreading it evenly over the `d_j` copies.
    pub fn from_pure(space: &SpinSpace, psi: &PureState) -> Result<Self> {
        let Basis::Dicke { two_j } = psi.basis() else {
            return Err(Error::BasisMismatch {
                left: psi.basis().to_string(),
                right: space.symmetric_basis().to_string(),
            });
        };
        let k = space.block_index(two_j)?;
        let mut out = Self::zeros(space);
        let w = 1.0 / (out.degeneracies[k] * psi.norm().powi(2));
        let a = psi.amplitudes();
        let d = a.len();
        let blk = out.block_mut(k);
        for i in 0..d {
            for j in 0..d {
                blk[i * d + j] = a[i] * a[j].conj() * w;
            }
        }
        Ok(out)
    }

    pub fn maximally_mixed(space: &SpinSpace) -> Self {
        let mut out = Self::zeros(space);
        let p = 0.5f64.powi(space.n_spins() as i32);
        for k in 0..out.n_blocks() {
            let d = out.block_dim(k);
            let blk = out.block_mut(k);
            for i in 0..d {
                blk[i * d + i] = C64::new(p, 0.0);
            }
        }
        out
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_blocks(&self) -> usize {
        self.two_js.len()
    }

    pub fn two_j(&self, k: usize) -> u32 {
        self.two_js[k]
    }

    pub fn degeneracy(&self, k: usize) -> f64 {
        self.degeneracies[k]
    }

    pub fn block_dim(&self, k: usize) -> usize {
        self.two_js[k] as usize + 1
    }

    /// Row-major data of block `k`.
    pub fn block(&self, k: usize) -> &[C64] {
        &self.data[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [C64] {
        &mut self.data[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn block_matrix(&self, k: usize) -> DMatrix<C64> {
        let d = self.block_dim(k);
        DMatrix::from_row_slice(d, d, self.block(k))
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Total weight `d_j tr rho^j` of each block.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.n_blocks()).map(|k| self.degeneracies[k] * block_trace(self.block(k), self.block_dim(k)).re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for k in 0..self.n_blocks() {
            let d = self.block_dim(k);
            let b = self.block(k);
            for i in 0..d {
                for j in 0..d {
                    err = err.max((b[i * d + j] - b[j * d + i].conj()).norm());
                }
            }
        }
        err
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.n_blocks())
            .map(|k| HermitianEigen::new(&self.block_matrix(k)).values.min())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn moments(&self) -> SpinMoments {
        let ops: Vec<MomentOperators> =
            self.two_js.iter().map(|&two_j| MomentOperators::for_basis(Basis::Dicke { two_j })).collect();
        moments_of(&self.data, &self.offsets, &self.degeneracies, &ops)
    }

    /// `rho -> exp(-i pi Sx) rho exp(i pi Sx)`, which reverses `m` in every block.
    pub fn apply_pi_x(&mut self) {
        for k in 0..self.n_blocks() {
            let d = self.block_dim(k);
            let old = self.block(k).to_vec();
            let blk = self.block_mut(k);
            for i in 0..d {
                for j in 0..d {
                    blk[i * d + j] = old[(d - 1 - i) * d + (d - 1 - j)];
                }
            }
        }
    }

    /// `rho -> U rho U^dag` with one unitary per block.
    pub fn conjugate(&mut self, unitaries: &[Operator]) -> Result<()> {
        if unitaries.len() != self.n_blocks() {
            return Err(Error::InvalidParameter(format!(
                "expected {} block unitaries, got {}",
                self.n_blocks(),
                unitaries.len()
            )));
        }
        for (k, u) in unitaries.iter().enumerate() {
            let expected = Basis::Dicke { two_j: self.two_js[k] };
            if u.basis() != expected {
                return Err(Error::BasisMismatch {
                    left: u.basis().to_string(),
                    right: expected.to_string(),
                });
            }
            let m = u.matrix() * self.block_matrix(k) * u.matrix().adjoint();
            let d = self.block_dim(k);
            let blk = self.block_mut(k);
            for i in 0..d {
                for j in 0..d {
                    blk[i * d + j] = m[(i, j)];
                }
            }
        }
        Ok(())
    }
}

fn block_trace(b: &[C64], d: usize) -> C64 {
    (0..d).map(|i| b[i * d + i]).sum()
}

fn moments_of(data: &[C64], offsets: &[usize], degeneracies: &[f64], ops: &[MomentOperators]) -> SpinMoments {
    let mut m = SpinMoments::default();
    for (k, op) in ops.iter().enumerate() {
        if offsets[k + 1] > data.len() {
            break;
        }
        let blk = &data[offsets[k]..offsets[k + 1]];
        if blk.iter().all(|z| *z == ZERO) {
            continue;
        }
        m.accumulate(&op.density(blk), degeneracies[k]);
    }
    m
}

/// One coupling `rho^{src} -> rho^{tgt}`:
/// `d rho^{tgt}_{ab} += (gamma_phi / 2) w u_a u_b rho^{src}_{a+s, b+s}`.
#[derive(Clone, Debug)]
struct DephasingTerm {
    src: usize,
    shift: isize,
    weight: f64,
    u: Vec<f64>,
}

/// Uniform single-spin dephasing `(gamma_phi / 2) sum_k D[sigma_z^k]` acting
/// on the block representation.
///
/// With `Phi(rho) = sum_k sigma_z^k rho sigma_z^k`, coupling spin `k` to the
/// remaining `N - 1` spins (total spin `j1`) gives
///
/// * `j -> j`: `(N/d_j) sum_{j1 = j -+ 1/2} d^{N-1}_{j1} m m' / (j1 + 1/2)^2`
/// * `j -> j-1`: `(N/d_{j-1}) d^{N-1}_{j-1/2} sqrt((j^2 - m^2)(j^2 - m'^2)) / j^2`
/// * `j -> j+1`: `(N/d_{j+1}) d^{N-1}_{j+1/2} sqrt(((j+1)^2 - m^2)((j+1)^2 - m'^2)) / (j+1)^2`
///
/// and `D = (Phi - N) / 2` per unit rate.
#[derive(Clone, Debug)]
pub struct DephasingSuperoperator {
    gamma_phi: f64,
    n_spins: usize,
    targets: Vec<Vec<DephasingTerm>>,
}

impl DephasingSuperoperator {
    pub fn new(space: &SpinSpace, gamma_phi: f64) -> Self {
        let n = space.n_spins();
        let blocks = space.blocks();
        let ln_d = |two_j: u32| ln_block_degeneracy(n, two_j);
        // total spin of the other N - 1 spins must be a valid block
        let ln_d_rest = |two_j1: i64| -> Option<f64> {
            if two_j1 < 0 || two_j1 > n as i64 - 1 {
                None
            } else {
                Some(ln_block_degeneracy(n - 1, two_j1 as u32))
            }
        };
        let nf = n as f64;
        let targets = blocks
            .iter()
            .map(|tgt| {
                let tj = tgt.two_j as i64;
                let dim = tgt.dim();
                let j = tgt.j();
                let m_of = |a: usize| a as f64 - j;
                let mut terms = Vec::new();
                let k_tgt = space.block_index(tgt.two_j).expect("own block");
                // same block
                for (two_j1, denom) in [(tj - 1, j), (tj + 1, j + 1.0)] {
                    if let Some(ln_rest) = ln_d_rest(two_j1) {
                        if denom > 0.0 {
                            terms.push(DephasingTerm {
                                src: k_tgt,
                                shift: 0,
                                weight: nf * (ln_rest - ln_d(tgt.two_j)).exp(),
                                u: (0..dim).map(|a| m_of(a) / denom).collect(),
                            });
                        }
                    }
                }
                // from j + 1 down to j: spins j1 = j + 1/2
                if let (Ok(src), Some(ln_rest)) = (space.block_index(tgt.two_j + 2), ln_d_rest(tj + 1)) {
                    let js = j + 1.0;
                    terms.push(DephasingTerm {
                        src,
                        shift: 1,
                        weight: nf * (ln_rest - ln_d(tgt.two_j)).exp(),
                        u: (0..dim).map(|a| (js * js - m_of(a).powi(2)).max(0.0).sqrt() / js).collect(),
                    });
                }
                // from j - 1 up to j: spins j1 = j - 1/2
                if tj >= 2 {
                    if let (Ok(src), Some(ln_rest)) = (space.block_index(tgt.two_j - 2), ln_d_rest(tj - 1)) {
                        terms.push(DephasingTerm {
                            src,
                            shift: -1,
                            weight: nf * (ln_rest - ln_d(tgt.two_j)).exp(),
                            u: (0..dim).map(|a| (j * j - m_of(a).powi(2)).max(0.0).sqrt() / j).collect(),
                        });
                    }
                }
                terms
            })
            .collect();
        Self {
            gamma_phi,
            n_spins: n,
            targets,
        }
    }

    pub fn gamma_phi(&self) -> f64 {
        self.gamma_phi
    }

    /// `out += D(rho)` over the first `active` blocks.
    fn apply_add(&self, rho: &[C64], out: &mut [C64], offsets: &[usize], dims: &[usize], active: usize) {
        let g = 0.5 * self.gamma_phi;
        let nf = self.n_spins as f64;
        for k in 0..active {
            let d = dims[k];
            let (o0, o1) = (offsets[k], offsets[k + 1]);
            for (o, r) in out[o0..o1].iter_mut().zip(&rho[o0..o1]) {
                *o -= r * (g * nf);
            }
            for term in &self.targets[k] {
                if term.src >= active {
                    continue;
                }
                let ds = dims[term.src];
                let src = &rho[offsets[term.src]..offsets[term.src + 1]];
                for a in 0..d {
                    let sa = a as isize + term.shift;
                    if sa < 0 || sa >= ds as isize || term.u[a] == 0.0 {
                        continue;
                    }
                    let ca = g * term.weight * term.u[a];
                    for b in 0..d {
                        let sb = b as isize + term.shift;
                        if sb < 0 || sb >= ds as isize {
                            continue;
                        }
                        out[o0 + a * d + b] += src[sa as usize * ds + sb as usize] * (ca * term.u[b]);
                    }
                }
            }
        }
    }
}

/// Master equation on the block representation: a Hamiltonian and collective
/// jump operators acting identically on every block, plus local dephasing.
#[derive(Clone, Debug)]
pub struct BlockLindbladian {
    n_spins: usize,
    generators: Vec<DenseLindbladian>,
    dephasing: Option<DephasingSuperoperator>,
    moments: Vec<MomentOperators>,
    offsets: Vec<usize>,
    dims: Vec<usize>,
    degeneracies: Vec<f64>,
}

impl BlockLindbladian {
    /// `build` returns the Hamiltonian and collective jumps for one block.
    pub fn new<F>(space: &SpinSpace, gamma_phi: f64, mut build: F) -> Result<Self>
    where
        F: FnMut(&SpinOperators) -> Result<(Operator, Vec<Operator>)>,
    {
        if gamma_phi < 0.0 {
            return Err(Error::InvalidParameter(format!("gamma_phi must be non-negative, got {gamma_phi}")));
        }
        let mut generators = Vec::new();
        let mut moments = Vec::new();
        for b in space.blocks() {
            let ops = block_operators(b.two_j);
            let (h, jumps) = build(&ops)?;
            generators.push(DenseLindbladian::new(&h, &jumps)?);
            moments.push(MomentOperators::for_basis(Basis::Dicke { two_j: b.two_j }));
        }
        let layout = BlockDensityMatrix::zeros(space);
        Ok(Self {
            n_spins: space.n_spins(),
            generators,
            dephasing: (gamma_phi > 0.0).then(|| DephasingSuperoperator::new(space, gamma_phi)),
            moments,
            dims: space.blocks().iter().map(|b| b.dim()).collect(),
            degeneracies: layout.degeneracies.clone(),
            offsets: layout.offsets,
        })
    }

    /// Effective spin model with collective decay `sqrt(Gamma) z[r]` and local
    /// dephasing at `gamma_phi`.
    pub fn from_effective(space: &SpinSpace, params: &EffectiveParams, gamma_phi: f64) -> Result<Self> {
        Self::new(space, gamma_phi, |ops| {
            let h = effective_hamiltonian(ops, params);
            let jumps = if params.gamma_big > 0.0 {
                vec![z_jump(ops, params.r).scale_re(params.gamma_big.sqrt())]
            } else {
                Vec::new()
            };
            Ok((h, jumps))
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    fn rhs(&self, rho: &[C64], out: &mut [C64], scratch: &mut [Scratch], active: usize) {
        out.iter_mut().for_each(|z| *z = ZERO);
        for k in 0..active {
            let (o0, o1) = (self.offsets[k], self.offsets[k + 1]);
            self.generators[k].apply_add(&rho[o0..o1], &mut out[o0..o1], &mut scratch[k]);
        }
        if let Some(dp) = &self.dephasing {
            dp.apply_add(rho, out, &self.offsets, &self.dims, active);
        }
    }

    /// `d rho / dt` for a full block density matrix.
    pub fn derivative(&self, rho: &BlockDensityMatrix) -> BlockDensityMatrix {
        let mut scratch: Vec<Scratch> = self.generators.iter().map(|g| g.scratch()).collect();
        let mut out = rho.clone();
        self.rhs(&rho.data, &mut out.data, &mut scratch, self.generators.len());
        out
    }

    pub fn moments(&self, rho: &BlockDensityMatrix) -> SpinMoments {
        moments_of(&rho.data, &self.offsets, &self.degeneracies, &self.moments)
    }
}

/// Instantaneous `pi` pulse about `x` applied once during a Lindblad run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoPulse {
    pub time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LindbladOptions {
    pub integrator: IntegratorOptions,
    pub echo: Option<EchoPulse>,
    /// Blocks below the lowest one holding at least this population, apart
    /// from its immediate neighbour, are frozen; re-checked at every output.
    pub block_floor: Option<f64>,
    pub keep_states: bool,
    pub check_positivity: bool,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self {
            integrator: IntegratorOptions::lindblad_default(),
            echo: None,
            block_floor: None,
            keep_states: false,
            check_positivity: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LindbladTrajectory {
    pub times: Vec<f64>,
    pub moments: Vec<SpinMoments>,
    pub states: Vec<BlockDensityMatrix>,
    pub final_state: BlockDensityMatrix,
    pub max_trace_error: f64,
    /// Smallest block eigenvalue seen at an output time (`+inf` if unchecked).
    pub min_eigenvalue: f64,
    pub stats: IntegratorStats,
}

impl LindbladTrajectory {
    pub fn positivity_flagged(&self) -> bool {
        self.min_eigenvalue < POSITIVITY_GUARD
    }
}

/// Integrates the block master equation from `t = 0`, recording spin moments
/// at every output time.
pub fn evolve_lindblad(
    l: &BlockLindbladian,
    rho0: &BlockDensityMatrix,
    times: &[f64],
    opts: &LindbladOptions,
) -> Result<LindbladTrajectory> {
    opts.integrator.validate()?;
    check_time_grid(0.0, times)?;
    if rho0.n_spins != l.n_spins {
        return Err(Error::InvalidParameter(format!(
            "state has {} spins, generator {}",
            rho0.n_spins, l.n_spins
        )));
    }
    let mut state = rho0.clone();
    let mut traj = LindbladTrajectory {
        times: times.to_vec(),
        moments: Vec::with_capacity(times.len()),
        states: Vec::new(),
        final_state: rho0.clone(),
        max_trace_error: 0.0,
        min_eigenvalue: f64::INFINITY,
        stats: IntegratorStats::default(),
    };
    let mut scratch: Vec<Scratch> = l.generators.iter().map(|g| g.scratch()).collect();
    let n_blocks = l.generators.len();
    let mut pending_echo = opts.echo.map(|e| e.time);
    let mut t = 0.0;
    let mut idx = 0;
    loop {
        if let Some(te) = pending_echo {
            if idx == times.len() || times[idx] > te {
                if te > t {
                    let active = active_blocks(&state, opts.block_floor);
                    let len = l.offsets[active];
                    let y0 = state.data[..len].to_vec();
                    let (y, st) = dopri5(
                        |_, y, dy| l.rhs(y, dy, &mut scratch, active),
                        t,
                        y0,
                        &[te],
                        &opts.integrator,
                        |_, _, _| Ok(()),
                    )?;
                    state.data[..len].copy_from_slice(&y);
                    traj.stats.merge(&st);
                    t = te;
                }
                state.apply_pi_x();
                pending_echo = None;
            }
        }
        if idx == times.len() {
            break;
        }
        let mut end = times.len();
        if let Some(te) = pending_echo {
            end = end.min(times.partition_point(|&x| x <= te));
        }
        if opts.block_floor.is_some() {
            end = end.min(idx + 1);
        }
        let active = active_blocks(&state, opts.block_floor);
        let len = l.offsets[active];
        let (head, tail) = state.data.split_at_mut(len);
        let y0 = head.to_vec();
        let mut full = vec![ZERO; l.offsets[n_blocks]];
        full[len..].copy_from_slice(tail);
        let mut observe = |_: usize, t_out: f64, y: &[C64]| -> Result<()> {
            full[..len].copy_from_slice(y);
            let view = BlockDensityMatrix {
                data: std::mem::take(&mut full),
                ..rho0.clone_layout()
            };
            let trace = view.trace();
            let err = (trace - 1.0).abs();
            traj.max_trace_error = traj.max_trace_error.max(err);
            if err > TRACE_TOLERANCE {
                return Err(Error::IntegrationFailure {
                    time: t_out,
                    reason: format!("trace drifted to {trace}"),
                });
            }
            if opts.check_positivity {
                let min_eig = view.min_eigenvalue();
                traj.min_eigenvalue = traj.min_eigenvalue.min(min_eig);
                if min_eig < POSITIVITY_FAILURE {
                    return Err(Error::PositivityFailure {
                        time: t_out,
                        min_eigenvalue: min_eig,
                    });
                }
            }
            traj.moments.push(l.moments(&view));
            if opts.keep_states {
                traj.states.push(view.clone());
            }
            full = view.data;
            Ok(())
        };
        let (y, st) = dopri5(
            |_, y, dy| l.rhs(y, dy, &mut scratch, active),
            t,
            y0,
            &times[idx..end],
            &opts.integrator,
            &mut observe,
        )?;
        head.copy_from_slice(&y);
        traj.stats.merge(&st);
        t = times[end - 1];
        idx = end;
    }
    traj.final_state = state;
    Ok(traj)
}

impl BlockDensityMatrix {
    fn clone_layout(&self) -> Self {
        Self {
            n_spins: self.n_spins,
            two_js: self.two_js.clone(),
            degeneracies: self.degeneracies.clone(),
            offsets: self.offsets.clone(),
            data: Vec::new(),
        }
    }
}

/// Number of leading (highest-`j`) blocks to evolve.
fn active_blocks(state: &BlockDensityMatrix, floor: Option<f64>) -> usize {
    let n = state.n_blocks();
    let Some(floor) = floor else {
        return n;
    };
    let pops = state.populations();
    let lowest = pops.iter().rposition(|&p| p >= floor).unwrap_or(0);
    (lowest + 2).min(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::coherent_spin_state;

    #[test]
    fn maximally_mixed_has_unit_trace() {
        for n in 1..=9 {
            let s = SpinSpace::new(n).unwrap();
            assert!((BlockDensityMatrix::maximally_mixed(&s).trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_preserves_trace_and_fixes_identity() {
        for n in 1..=7 {
            let s = SpinSpace::new(n).unwrap();
            let l = BlockLindbladian::new(&s, 1.0, |ops| Ok((Operator::zeros(ops.basis()), vec![]))).unwrap();
            // the identity is a fixed point of pure dephasing
            let mixed = BlockDensityMatrix::maximally_mixed(&s);
            let d = l.derivative(&mixed);
            assert!(d.as_slice().iter().all(|z| z.norm() < 1e-12), "n = {n}");
            let psi = coherent_spin_state(&s, n as u32, 1.1, 0.4).unwrap();
            let rho = BlockDensityMatrix::from_pure(&s, &psi).unwrap();
            let d = l.derivative(&rho);
            assert!(d.trace().abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn single_spin_coherence_decays_at_gamma() {
        let s = SpinSpace::new(1).unwrap();
        let l = BlockLindbladian::new(&s, 0.3, |ops| Ok((Operator::zeros(ops.basis()), vec![]))).unwrap();
        let psi = coherent_spin_state(&s, 1, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let rho = BlockDensityMatrix::from_pure(&s, &psi).unwrap();
        let d = l.derivative(&rho);
        let expect = -0.3 * rho.block(0)[1];
        assert!((d.block(0)[1] - expect).norm() < 1e-14);
    }

    #[test]
    fn echo_reverses_m() {
        let s = SpinSpace::new(4).unwrap();
        let psi = coherent_spin_state(&s, 4, 0.3, 0.0).unwrap();
        let mut rho = BlockDensityMatrix::from_pure(&s, &psi).unwrap();
        let before = rho.moments();
        rho.apply_pi_x();
        let after = rho.moments();
        assert!((before.mean[2] + after.mean[2]).abs() < 1e-12);
        assert!((before.mean[0] - after.mean[0]).abs() < 1e-12);
    }

    #[test]
    fn floor_keeps_a_buffer_block() {
        let s = SpinSpace::new(6).unwrap();
        let psi = coherent_spin_state(&s, 6, 0.3, 0.0).unwrap();
        let rho = BlockDensityMatrix::from_pure(&s, &psi).unwrap();
        assert_eq!(active_blocks(&rho, Some(1e-10)), 2);
        assert_eq!(active_blocks(&rho, None), 4);
    }
}

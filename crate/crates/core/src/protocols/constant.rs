use serde::{Deserialize, Serialize};

use super::grid::{InitialState, TimeGrid};
use crate::dynamics::{
    echo_trace_static, evolve_lindblad, evolve_pure, BlockDensityMatrix, BlockLindbladian, EchoPulse, LindbladOptions,
    PureHamiltonian,
};
use crate::error::{Error, Result};
use crate::linalg::{Basis, Operator, PureState};
use crate::metrics::{MomentOperators, SpinMoments, SqueezingTrace};
use crate::model::{build_preset, squeezed_vacuum_populations, DriveParams, EffectiveParams, PresetKind, PresetOptions};
use crate::ode::{IntegratorOptions, IntegratorStats};
use crate::spin::{block_operators, pi_x_rotation, SpinSpace};

/// Fock populations below this are dropped from the dispersive average.
const SECTOR_TAIL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantDriveSpec {
    pub preset: PresetKind,
    /// Supplies `n_spins`, `delta_c`, `g`, rates, and for custom presets
    /// `lambda` and `delta_s`.
    pub drive: DriveParams,
    pub dispersive_shift: bool,
    pub oat_y_threshold: f64,
    pub initial: InitialState,
    pub grid: TimeGrid,
    /// Pi pulse about x at half of each output time (coherent runs) or at
    /// half of the final time (dissipative runs).
    pub echo: bool,
    pub dissipation: bool,
    /// Include `-chi Sz b^dag b` with the Bogoliubov mode in squeezed vacuum.
    pub dispersive: bool,
    pub integrator: Option<IntegratorOptions>,
}

impl ConstantDriveSpec {
    pub fn new(preset: PresetKind, drive: DriveParams, grid: TimeGrid) -> Self {
        Self {
            preset,
            drive,
            dispersive_shift: false,
            oat_y_threshold: 0.1,
            initial: InitialState::CoherentX,
            grid,
            echo: false,
            dissipation: false,
            dispersive: false,
            integrator: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantDriveResult {
    pub trace: SqueezingTrace,
    pub drive: DriveParams,
    pub params: EffectiveParams,
    pub warnings: Vec<String>,
    pub stats: IntegratorStats,
    /// Worst `| |psi| - 1 |` (coherent) or `|tr rho - 1|` (dissipative).
    pub max_norm_error: f64,
    /// Smallest block eigenvalue (dissipative runs).
    pub min_eigenvalue: Option<f64>,
}

pub fn run_constant_drive(spec: &ConstantDriveSpec) -> Result<ConstantDriveResult> {
    let opts = PresetOptions {
        dispersive_shift: spec.dispersive_shift,
        oat_y_threshold: spec.oat_y_threshold,
    };
    let preset = build_preset(spec.preset, &spec.drive, &opts)?;
    let params = preset.params;
    let n = spec.drive.n_spins;
    let space = SpinSpace::new(n)?;
    let times = spec.grid.times(&params)?;
    let psi0 = spec.initial.build(&space)?;
    let mut trace = SqueezingTrace::new(n);
    let mut stats = IntegratorStats::default();
    let mut max_norm_error: f64 = 0.0;
    let mut min_eigenvalue = None;

    if spec.dissipation {
        if spec.dispersive {
            return Err(Error::InvalidParameter(
                "the dispersive term is only supported for coherent runs".into(),
            ));
        }
        let l = BlockLindbladian::from_effective(&space, &params, preset.drive.gamma_phi)?;
        let rho0 = BlockDensityMatrix::from_pure(&space, &psi0)?;
        let t_end = *times.last().expect("grid has points");
        let lopts = LindbladOptions {
            integrator: spec.integrator.unwrap_or_else(IntegratorOptions::lindblad_default),
            echo: spec.echo.then_some(EchoPulse { time: 0.5 * t_end }),
            ..LindbladOptions::default()
        };
        let traj = evolve_lindblad(&l, &rho0, &times, &lopts)?;
        for (t, m) in traj.times.iter().zip(&traj.moments) {
            trace.push(*t, *m);
        }
        stats = traj.stats;
        max_norm_error = traj.max_trace_error;
        min_eigenvalue = Some(traj.min_eigenvalue);
    } else {
        let integrator = spec.integrator.unwrap_or_else(IntegratorOptions::pure_default);
        let sectors = if spec.dispersive {
            squeezed_vacuum_populations(params.r, SECTOR_TAIL)
        } else {
            vec![(0, 1.0)]
        };
        let total: f64 = sectors.iter().map(|(_, p)| p).sum();
        let ops = block_operators(space.max_two_j());
        let mut acc = vec![SpinMoments::default(); times.len()];
        for &(photons, p) in &sectors {
            let h = if photons == 0 {
                preset.hamiltonian.clone()
            } else {
                preset
                    .hamiltonian
                    .add(&ops.sz.scale_re(-params.chi * photons as f64))?
            };
            let (moments, st, drift) = coherent_moments(&h, &psi0, &times, spec.echo, &integrator)?;
            stats.merge(&st);
            max_norm_error = max_norm_error.max(drift);
            for (a, m) in acc.iter_mut().zip(&moments) {
                a.accumulate(m, p / total);
            }
        }
        for (t, m) in times.iter().zip(acc) {
            trace.push(*t, m);
        }
    }
    Ok(ConstantDriveResult {
        trace,
        drive: preset.drive,
        params,
        warnings: preset.warnings,
        stats,
        max_norm_error,
        min_eigenvalue,
    })
}

fn coherent_moments(
    h: &Operator,
    psi0: &PureState,
    times: &[f64],
    echo: bool,
    integrator: &IntegratorOptions,
) -> Result<(Vec<SpinMoments>, IntegratorStats, f64)> {
    let Basis::Dicke { two_j } = h.basis() else {
        return Err(Error::InvalidParameter("coherent runs act on a Dicke block".into()));
    };
    let mops = MomentOperators::for_basis(h.basis());
    if echo {
        // echo at half of every output time: exact for a static Hamiltonian
        let states = echo_trace_static(h, psi0, times, &pi_x_rotation(two_j))?;
        let drift = states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
        let moments = states.iter().map(|s| mops.pure(s.amplitudes().as_slice())).collect();
        Ok((moments, IntegratorStats::default(), drift))
    } else {
        let traj = evolve_pure(PureHamiltonian::Static(h), psi0, times, integrator)?;
        let moments = traj.states.iter().map(|s| mops.pure(s.amplitudes().as_slice())).collect();
        Ok((moments, traj.stats, traj.max_norm_drift))
    }
}

//! End-to-end runs: constant-drive twisting (coherent or dissipative), the
//! adiabatic dark-state ramp, and optimization sweeps over the drive.

mod adiabatic;
mod constant;
mod grid;
mod ramp;
mod sweep;

pub use adiabatic::{run_adiabatic, AdiabaticResult, AdiabaticSpec};
pub use constant::{run_constant_drive, ConstantDriveResult, ConstantDriveSpec};
pub use grid::{InitialState, TimeGrid, TimeUnit};
pub use ramp::RampSchedule;
pub use sweep::{
    fit_power_law, golden_section, optimize_time, sweep_optimize, PowerLawFit, SweepPoint, SweepResult, SweepRow, SweepSpec,
};

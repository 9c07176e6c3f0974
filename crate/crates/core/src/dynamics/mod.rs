//! Time evolution: pure states under static or scheduled Hamiltonians,
//! permutation-invariant Lindblad dynamics on Dicke blocks, and a
//! brute-force product-space master equation used as an oracle.

mod block;
mod bruteforce;
mod lindblad;
mod pure;
mod schedule;

pub use block::{
    evolve_lindblad, BlockDensityMatrix, BlockLindbladian, DephasingSuperoperator, EchoPulse, LindbladOptions,
    LindbladTrajectory, POSITIVITY_FAILURE, POSITIVITY_GUARD,
};
pub use bruteforce::{evolve_bruteforce, product_space_model, BruteForceTrajectory, BRUTE_FORCE_MAX_SPINS};
pub use lindblad::DenseLindbladian;
pub use pure::{
    echo_trace_static, evolve_pure, evolve_pure_with_echo, PureHamiltonian, PureTrajectory, NORM_DRIFT_TOLERANCE,
};
pub use schedule::{CoefficientSchedule, Schedule};

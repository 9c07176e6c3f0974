use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block 2j={two_j} is not part of the space of {n_spins} spins")]
    BlockNotInSpace { n_spins: usize, two_j: u32 },

    #[error("operand bases differ: {left} vs {right}")]
    BasisMismatch { left: String, right: String },

    #[error("dark state requires an even number of spins (got {0})")]
    NoDarkState(usize),

    #[error("unstable drive: |lambda| = {lambda} must be below |delta_c| = {delta_c}")]
    UnstableDrive { delta_c: f64, lambda: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mean spin vanished (|<S>| = {0:e}); squeezing parameter undefined")]
    MeanSpinVanished(f64),

    #[error("integration failed at t = {time}: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("positivity drift {min_eigenvalue:e} at t = {time}")]
    PositivityFailure { time: f64, min_eigenvalue: f64 },

    #[error("refusing brute-force evolution for N = {0} (limit is 8)")]
    RefusedSize(usize),

    #[error("optimum unbounded: {0}")]
    OptimumUnbounded(String),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::PureState;
use crate::model::EffectiveParams;
use crate::spin::{coherent_spin_state, SpinSpace};

/// Unit in which a protocol time is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// `1/g`
    InverseG,
    /// `1/chi`
    InverseChi,
    /// `1/(N chi~)`
    InverseNChiTilde,
}

impl TimeUnit {
    /// Length of one unit in `1/g`.
    pub fn scale(&self, p: &EffectiveParams) -> f64 {
        match self {
            TimeUnit::InverseG => 1.0,
            TimeUnit::InverseChi => 1.0 / p.chi,
            TimeUnit::InverseNChiTilde => 1.0 / (p.n_spins as f64 * p.chi_tilde),
        }
    }
}

/// Uniform output grid `0, t_max/(points-1), ..., t_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
    pub unit: TimeUnit,
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidTimeGrid(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.points < 2 {
            return Err(Error::InvalidTimeGrid(format!("need at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    /// Output times in `1/g`.
    pub fn times(&self, p: &EffectiveParams) -> Result<Vec<f64>> {
        self.validate()?;
        let t_max = self.t_max * self.unit.scale(p);
        let n = self.points - 1;
        Ok((0..=n).map(|k| t_max * k as f64 / n as f64).collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialState {
    /// All spins along +x.
    #[default]
    CoherentX,
    /// All spins along -z, `|N/2, -N/2>`.
    SouthPole,
    /// Spin coherent state at polar angle `theta` from +z, azimuth `phi`.
    Coherent { theta: f64, phi: f64 },
}

impl InitialState {
    pub fn build(&self, space: &SpinSpace) -> Result<PureState> {
        let two_j = space.max_two_j();
        match *self {
            InitialState::CoherentX => coherent_spin_state(space, two_j, std::f64::consts::FRAC_PI_2, 0.0),
            InitialState::SouthPole => Ok(PureState::basis_state(space.symmetric_basis(), 0)),
            InitialState::Coherent { theta, phi } => coherent_spin_state(space, two_j, theta, phi),
        }
    }
}

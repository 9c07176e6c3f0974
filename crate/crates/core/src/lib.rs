//! Spin squeezing in ensembles coupled to a parametrically driven cavity:
//! collective-spin algebra, effective and full models, coherent and
//! dissipative dynamics, squeezing metrics, protocols and the linearized
//! moment theory.

pub mod checks;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod linalg;
pub mod linearized;
pub mod metrics;
pub mod model;
pub mod ode;
pub mod output;
pub mod product;
pub mod protocols;
pub mod spin;

pub use error::{Error, Result};

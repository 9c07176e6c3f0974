//! Browser bindings. Every export returns a JSON string.

use wasm_bindgen::prelude::*;

pub mod api;

fn js(r: spinsq::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Coherent evolution from +x; times in units of `1/(N chi~)`.
#[wasm_bindgen]
pub fn coherent_trace(n_spins: usize, lambda_ratio: f64, echo: bool) -> Result<String, JsError> {
    js(api::coherent_trace(n_spins, lambda_ratio, echo))
}

/// `xi_R^2` of the dark state of `Sigma[r]` for `r` in `[0, r_max]`.
#[wasm_bindgen]
pub fn dark_state_curve(n_spins: usize, r_max: f64, points: usize) -> Result<String, JsError> {
    js(api::dark_state_curve(n_spins, r_max, points))
}

/// Ramp `r(t)` and the drive that realizes it, over `t / tau` in `[0, 1]`.
#[wasm_bindgen]
pub fn ramp_schedule(r_f: f64, points: usize) -> Result<String, JsError> {
    js(api::ramp_schedule(r_f, points))
}

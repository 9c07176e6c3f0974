//! Result persistence: trace CSV, sweep CSV and JSON summaries.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! re-run with the same configuration reproduces the CSV byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::metrics::{to_db, SqueezingTrace};
use crate::protocols::SweepResult;

pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRACE_HEADER: [&str; 8] = ["t", "sx", "sy", "sz", "var_min", "theta_opt", "xi2", "xi2_db"];

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x}")
    }
}

/// Trace CSV with the time column multiplied by `time_scale`.
pub fn trace_csv(trace: &SqueezingTrace, time_scale: f64) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER)?;
    for p in &trace.points {
        let m = p.moments.mean;
        w.write_record([
            num(p.t * time_scale),
            num(m[0]),
            num(m[1]),
            num(m[2]),
            num(p.var_min),
            num(p.theta_opt),
            num(p.xi2),
            num(p.xi2_db),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn write_trace_csv(path: &Path, trace: &SqueezingTrace, time_scale: f64) -> Result<()> {
    fs::write(path, trace_csv(trace, time_scale)?)?;
    Ok(())
}

/// `g` converts the optimal time to `chi t`.
pub fn sweep_rows_csv(result: &SweepResult, g: f64) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "n",
        "cooperativity",
        "lambda_ratio",
        "delta_tilde_over_chi",
        "best_xi2",
        "best_xi2_db",
        "best_e_beta",
        "best_chi_t",
        "converged",
        "note",
    ])?;
    for r in &result.rows {
        let chi = g * g / r.best_e_beta;
        w.write_record([
            r.n.to_string(),
            num(r.cooperativity),
            num(r.lambda_ratio),
            num(r.delta_tilde_over_chi),
            num(r.best_xi2),
            num(to_db(r.best_xi2)),
            num(r.best_e_beta),
            num(r.best_t * chi),
            r.converged.to_string(),
            r.note.clone(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn sweep_points_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "lambda_ratio", "delta_tilde_over_chi", "e_beta", "xi2", "t_opt", "error"])?;
    for p in &result.points {
        w.write_record([
            p.n.to_string(),
            num(p.lambda_ratio),
            num(p.delta_tilde_over_chi),
            num(p.e_beta),
            num(p.xi2),
            num(p.t_opt),
            p.error.clone().unwrap_or_default(),
        ])?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Outcome of one internal consistency check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// JSON sidecar written next to the CSV files.
#[derive(Clone, Debug, Serialize)]
pub struct Summary<T: Serialize> {
    pub schema_version: u32,
    pub code_version: &'static str,
    pub config: RunConfig,
    pub files: Vec<String>,
    pub incomplete: bool,
    pub gates: Vec<Gate>,
    pub wall_clock_s: f64,
    pub result: T,
}

impl<T: Serialize> Summary<T> {
    pub fn new(config: RunConfig, result: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            code_version: CODE_VERSION,
            config,
            files: Vec::new(),
            incomplete: false,
            gates: Vec::new(),
            wall_clock_s: 0.0,
            result,
        }
    }

    pub fn all_gates_pass(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

/// Write `value` as pretty JSON; non-finite numbers become `null`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::SpinMoments;

    #[test]
    fn csv_layout() {
        let mut tr = SqueezingTrace::new(4);
        let mut m = SpinMoments::default();
        m.mean = [2.0, 0.0, 0.0];
        m.second = [[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        tr.push(0.5, m);
        tr.push(1.0, SpinMoments::default());
        let text = String::from_utf8(trace_csv(&tr, 2.0).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,sx,sy,sz,var_min,theta_opt,xi2,xi2_db");
        assert!(lines[1].starts_with("1,2,0,0,1,"));
        assert!(lines[1].ends_with(",1,0"));
        assert!(lines[2].contains("nan"));
    }
}

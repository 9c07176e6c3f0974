//! TOML run configuration.
//!
//! ```toml
//! [model]
//! n_spins = 100
//! preset = "itat"          # oat_z | itat | itat_zx | oat_y | twist_and_turn | custom
//! e_beta = 20.0            # with lambda_ratio, or give delta_c and lambda
//! lambda_ratio = 0.0
//! g = 1.0
//! kappa = 0.0
//! gamma_phi = 0.0
//!
//! [protocol]
//! kind = "constant"        # constant | adiabatic
//! t_max = 3.0
//! points = 121
//! time_unit = "inverse_n_chi_tilde"
//!
//! [integrator]
//! method = "adaptive_rk"
//! ```
//!
//! A `[sweep]` section (with no `[protocol]`) selects the drive/time
//! optimization. All frequencies are in units of `g`. Unknown keys and
//! invalid values are collected and reported together.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::{DriveParams, PresetKind};
use crate::ode::{IntegratorOptions, Method};
use crate::protocols::{AdiabaticSpec, ConstantDriveSpec, InitialState, SweepSpec, TimeGrid, TimeUnit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RunConfig {
    Constant(ConstantDriveSpec),
    Adiabatic(AdiabaticSpec),
    Sweep(SweepSpec),
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut root: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        let mut errors = Vec::new();
        let mut section = |name: &str, errors: &mut Vec<String>| -> Option<Table> {
            match root.remove(name) {
                None => None,
                Some(Value::Table(t)) => Some(t),
                Some(_) => {
                    errors.push(format!("{name}: expected a table"));
                    None
                }
            }
        };
        let model = section("model", &mut errors);
        let protocol = section("protocol", &mut errors);
        let integrator = section("integrator", &mut errors);
        let sweep = section("sweep", &mut errors);
        for key in root.keys() {
            errors.push(format!("{key}: unknown section"));
        }

        let config = match (protocol, sweep) {
            (Some(_), Some(_)) => {
                errors.push("protocol, sweep: give one of the two sections".into());
                None
            }
            (None, None) => {
                errors.push("protocol: missing section (or give [sweep])".into());
                None
            }
            (None, Some(s)) => parse_sweep(model, s, integrator, &mut errors),
            (Some(p), None) => parse_protocol(model, p, integrator, &mut errors),
        };
        match config {
            Some(c) if errors.is_empty() => Ok(c),
            _ => Err(Error::Config(errors)),
        }
    }

    /// Inverse of [`RunConfig::from_toml_str`].
    pub fn to_toml_string(&self) -> String {
        let mut root = Table::new();
        let mut model = Table::new();
        let mut protocol = Table::new();
        let mut integrator = None;
        match self {
            RunConfig::Constant(s) => {
                let d = &s.drive;
                model.insert("n_spins".into(), Value::Integer(d.n_spins as i64));
                model.insert("preset".into(), Value::String(enum_name(&s.preset)));
                model.insert("delta_c".into(), Value::Float(d.delta_c));
                model.insert("lambda".into(), Value::Float(d.lambda_re));
                model.insert("delta_s".into(), Value::Float(d.delta_s));
                model.insert("g".into(), Value::Float(d.g));
                model.insert("kappa".into(), Value::Float(d.kappa));
                model.insert("gamma_phi".into(), Value::Float(d.gamma_phi));
                model.insert("dispersive_shift".into(), Value::Boolean(s.dispersive_shift));
                model.insert("oat_y_threshold".into(), Value::Float(s.oat_y_threshold));
                protocol.insert("kind".into(), Value::String("constant".into()));
                protocol.insert("t_max".into(), Value::Float(s.grid.t_max));
                protocol.insert("points".into(), Value::Integer(s.grid.points as i64));
                protocol.insert("time_unit".into(), Value::String(enum_name(&s.grid.unit)));
                match s.initial {
                    InitialState::CoherentX => {
                        protocol.insert("initial".into(), Value::String("coherent_x".into()));
                    }
                    InitialState::SouthPole => {
                        protocol.insert("initial".into(), Value::String("south_pole".into()));
                    }
                    InitialState::Coherent { theta, phi } => {
                        protocol.insert("initial".into(), Value::String("coherent".into()));
                        protocol.insert("theta".into(), Value::Float(theta));
                        protocol.insert("phi".into(), Value::Float(phi));
                    }
                }
                protocol.insert("echo".into(), Value::Boolean(s.echo));
                protocol.insert("dissipation".into(), Value::Boolean(s.dissipation));
                protocol.insert("dispersive".into(), Value::Boolean(s.dispersive));
                integrator = s.integrator;
            }
            RunConfig::Adiabatic(s) => {
                model.insert("n_spins".into(), Value::Integer(s.n_spins as i64));
                model.insert("e_beta".into(), Value::Float(s.e_beta));
                model.insert("g".into(), Value::Float(s.g));
                protocol.insert("kind".into(), Value::String("adiabatic".into()));
                protocol.insert("r_f".into(), Value::Float(s.r_f));
                protocol.insert("tau_chi".into(), Value::Float(s.tau_chi));
                protocol.insert("points".into(), Value::Integer(s.points as i64));
                protocol.insert("initial_steps".into(), Value::Integer(s.initial_steps as i64));
                protocol.insert("max_steps".into(), Value::Integer(s.max_steps as i64));
                protocol.insert("tolerance".into(), Value::Float(s.tolerance));
            }
            RunConfig::Sweep(s) => {
                model.insert("g".into(), Value::Float(s.g));
                model.insert("kappa".into(), Value::Float(s.kappa));
                model.insert("gamma_phi".into(), Value::Float(s.gamma_phi));
                let mut sw = Table::new();
                let ints = |v: &[usize]| Value::Array(v.iter().map(|&x| Value::Integer(x as i64)).collect());
                let floats = |v: &[f64]| Value::Array(v.iter().map(|&x| Value::Float(x)).collect());
                sw.insert("n_values".into(), ints(&s.n_values));
                sw.insert("lambda_ratios".into(), floats(&s.lambda_ratios));
                sw.insert("delta_tilde_over_chi".into(), floats(&s.delta_tilde_over_chi));
                sw.insert("e_beta_min".into(), Value::Float(s.e_beta_min));
                sw.insert("e_beta_max".into(), Value::Float(s.e_beta_max));
                sw.insert("e_beta_points".into(), Value::Integer(s.e_beta_points as i64));
                sw.insert("t_max".into(), Value::Float(s.t_max));
                sw.insert("time_points".into(), Value::Integer(s.time_points as i64));
                sw.insert("refine_tol".into(), Value::Float(s.refine_tol));
                sw.insert("max_iter".into(), Value::Integer(s.max_iter as i64));
                root.insert("sweep".into(), Value::Table(sw));
                integrator = Some(s.integrator);
            }
        }
        root.insert("model".into(), Value::Table(model));
        if !protocol.is_empty() {
            root.insert("protocol".into(), Value::Table(protocol));
        }
        if let Some(o) = integrator {
            let mut t = Table::new();
            t.insert("method".into(), Value::String(enum_name(&o.method)));
            t.insert("rtol".into(), Value::Float(o.rtol));
            t.insert("atol".into(), Value::Float(o.atol));
            if o.max_step.is_finite() {
                t.insert("max_step".into(), Value::Float(o.max_step));
            }
            t.insert("krylov_dim".into(), Value::Integer(o.krylov_dim as i64));
            root.insert("integrator".into(), Value::Table(t));
        }
        toml::to_string(&root).expect("plain tables serialize")
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit variants serialize to strings"),
    }
}

/// Reads keys out of one section, recording problems under `section.key`.
struct Reader<'e> {
    name: &'static str,
    table: Table,
    errors: &'e mut Vec<String>,
}

impl<'e> Reader<'e> {
    fn new(name: &'static str, table: Option<Table>, errors: &'e mut Vec<String>) -> Self {
        Self {
            name,
            table: table.unwrap_or_default(),
            errors,
        }
    }

    fn bad(&mut self, key: &str, msg: impl std::fmt::Display) {
        self.errors.push(format!("{}.{}: {}", self.name, key, msg));
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn f64_opt(&mut self, key: &str) -> Option<f64> {
        match self.table.remove(key)? {
            Value::Float(x) => Some(x),
            Value::Integer(i) => Some(i as f64),
            v => {
                self.bad(key, format!("expected a number, got {}", v.type_str()));
                None
            }
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.f64_opt(key).unwrap_or(default)
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        let x = self.f64(key, default);
        if !(x > 0.0 && x.is_finite()) {
            self.bad(key, format!("must be positive, got {x}"));
        }
        x
    }

    fn non_negative(&mut self, key: &str, default: f64) -> f64 {
        let x = self.f64(key, default);
        if !(x >= 0.0 && x.is_finite()) {
            self.bad(key, format!("must be non-negative, got {x}"));
        }
        x
    }

    fn usize_opt(&mut self, key: &str) -> Option<usize> {
        match self.table.remove(key)? {
            Value::Integer(i) if i >= 0 => Some(i as usize),
            v => {
                self.bad(key, format!("expected a non-negative integer, got {v}"));
                None
            }
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        self.usize_opt(key).unwrap_or(default)
    }

    fn bool(&mut self, key: &str, default: bool) -> bool {
        match self.table.remove(key) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(v) => {
                self.bad(key, format!("expected a boolean, got {v}"));
                default
            }
        }
    }

    /// String-valued enum parsed through its serde names.
    fn choice<T: for<'de> Deserialize<'de>>(&mut self, key: &str, default: T) -> T {
        match self.table.remove(key) {
            None => default,
            Some(Value::String(s)) => match serde_json::from_value(serde_json::Value::String(s.clone())) {
                Ok(v) => v,
                Err(_) => {
                    self.bad(key, format!("unknown value {s:?}"));
                    default
                }
            },
            Some(v) => {
                self.bad(key, format!("expected a string, got {v}"));
                default
            }
        }
    }

    fn list<T>(&mut self, key: &str, default: Vec<T>, item: impl Fn(&Value) -> Option<T>) -> Vec<T> {
        match self.table.remove(key) {
            None => default,
            Some(Value::Array(a)) => {
                let parsed: Option<Vec<T>> = a.iter().map(&item).collect();
                parsed.unwrap_or_else(|| {
                    self.bad(key, "array has entries of the wrong type");
                    default
                })
            }
            Some(v) => {
                self.bad(key, format!("expected an array, got {}", v.type_str()));
                default
            }
        }
    }

    /// Flag whatever was not consumed.
    fn finish(self) {
        for key in self.table.keys() {
            self.errors.push(format!("{}.{}: unknown key", self.name, key));
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_usize(v: &Value) -> Option<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Some(*i as usize),
        _ => None,
    }
}

fn parse_integrator(table: Option<Table>, base: IntegratorOptions, errors: &mut Vec<String>) -> IntegratorOptions {
    let mut r = Reader::new("integrator", table, errors);
    let mut o = base;
    o.method = r.choice::<Method>("method", o.method);
    o.rtol = r.positive("rtol", o.rtol);
    o.atol = r.positive("atol", o.atol);
    if r.has("max_step") {
        o.max_step = r.positive("max_step", o.max_step);
    }
    o.krylov_dim = r.usize("krylov_dim", o.krylov_dim);
    if o.krylov_dim < 2 {
        r.bad("krylov_dim", "must be at least 2");
    }
    r.finish();
    o
}

fn parse_protocol(
    model: Option<Table>,
    protocol: Table,
    integrator: Option<Table>,
    errors: &mut Vec<String>,
) -> Option<RunConfig> {
    let mut p = Reader::new("protocol", Some(protocol), errors);
    let kind = match p.table.remove("kind") {
        Some(Value::String(s)) if s == "constant" || s == "adiabatic" => s,
        Some(v) => {
            p.bad("kind", format!("expected \"constant\" or \"adiabatic\", got {v}"));
            return None;
        }
        None => {
            p.bad("kind", "missing");
            return None;
        }
    };
    if kind == "adiabatic" {
        let mut spec = AdiabaticSpec::new(0, 60.0);
        spec.r_f = p.positive("r_f", spec.r_f);
        spec.tau_chi = p.positive("tau_chi", spec.tau_chi);
        spec.points = p.usize("points", spec.points);
        spec.initial_steps = p.usize("initial_steps", spec.initial_steps);
        spec.max_steps = p.usize("max_steps", spec.max_steps);
        spec.tolerance = p.positive("tolerance", spec.tolerance);
        if spec.points < 2 {
            p.bad("points", "need at least 2");
        }
        p.finish();
        let mut m = Reader::new("model", model, errors);
        spec.n_spins = required_n(&mut m);
        spec.e_beta = m.positive("e_beta", spec.e_beta);
        spec.g = m.positive("g", spec.g);
        m.finish();
        if integrator.is_some() {
            errors.push("integrator: not used by the adiabatic protocol (fixed-step Magnus with step doubling)".into());
        }
        return Some(RunConfig::Adiabatic(spec));
    }

    let grid = TimeGrid {
        t_max: p.positive("t_max", 3.0),
        points: p.usize("points", 121),
        unit: p.choice("time_unit", TimeUnit::InverseNChiTilde),
    };
    if grid.points < 2 {
        p.bad("points", "need at least 2");
    }
    let initial = match p.table.remove("initial") {
        None => InitialState::CoherentX,
        Some(Value::String(s)) => match s.as_str() {
            "coherent_x" => InitialState::CoherentX,
            "south_pole" => InitialState::SouthPole,
            "coherent" => InitialState::Coherent {
                theta: p.f64("theta", std::f64::consts::FRAC_PI_2),
                phi: p.f64("phi", 0.0),
            },
            other => {
                p.bad("initial", format!("unknown value {other:?}"));
                InitialState::CoherentX
            }
        },
        Some(v) => {
            p.bad("initial", format!("expected a string, got {v}"));
            InitialState::CoherentX
        }
    };
    let echo = p.bool("echo", false);
    let dissipation = p.bool("dissipation", false);
    let dispersive = p.bool("dispersive", false);
    if dissipation && dispersive {
        p.bad("dispersive", "cannot be combined with dissipation");
    }
    p.finish();

    let mut m = Reader::new("model", model, errors);
    let n_spins = required_n(&mut m);
    let preset = m.choice("preset", PresetKind::Itat);
    let g = m.positive("g", 1.0);
    let by_target = m.has("e_beta") || m.has("lambda_ratio");
    let by_drive = m.has("delta_c") || m.has("lambda");
    let mut drive = if by_target && by_drive {
        m.bad("e_beta", "give either (e_beta, lambda_ratio) or (delta_c, lambda)");
        None
    } else if by_drive {
        let delta_c = m.f64("delta_c", 20.0);
        let lambda = m.f64("lambda", 0.0);
        if !(lambda.abs() < delta_c.abs()) {
            m.bad("lambda", format!("|lambda| = {lambda} must be below |delta_c| = {delta_c}"));
        }
        Some(DriveParams::new(n_spins, delta_c, lambda))
    } else {
        let e_beta = m.positive("e_beta", 20.0);
        let ratio = m.f64("lambda_ratio", 0.0);
        match DriveParams::from_target(n_spins, e_beta, ratio) {
            Ok(d) => Some(d),
            Err(e) => {
                m.bad("lambda_ratio", e);
                None
            }
        }
    };
    let delta_s = m.f64_opt("delta_s");
    let kappa = m.non_negative("kappa", 0.0);
    let gamma_phi = m.non_negative("gamma_phi", 0.0);
    let dispersive_shift = m.bool("dispersive_shift", false);
    let oat_y_threshold = m.positive("oat_y_threshold", 0.1);
    m.finish();
    if let Some(d) = drive.as_mut() {
        d.g = g;
        d.kappa = kappa;
        d.gamma_phi = gamma_phi;
        if let Some(ds) = delta_s {
            d.delta_s = ds;
        }
    }
    let base = if dissipation {
        IntegratorOptions::lindblad_default()
    } else {
        IntegratorOptions::pure_default()
    };
    let integrator = integrator.map(|t| parse_integrator(Some(t), base, errors));
    let drive = drive?;
    let mut spec = ConstantDriveSpec::new(preset, drive, grid);
    spec.dispersive_shift = dispersive_shift;
    spec.oat_y_threshold = oat_y_threshold;
    spec.initial = initial;
    spec.echo = echo;
    spec.dissipation = dissipation;
    spec.dispersive = dispersive;
    spec.integrator = integrator;
    Some(RunConfig::Constant(spec))
}

fn required_n(m: &mut Reader) -> usize {
    match m.usize_opt("n_spins") {
        Some(n) if n > 0 => n,
        Some(_) => {
            m.bad("n_spins", "must be positive");
            1
        }
        None => {
            if !m.errors.iter().any(|e| e.starts_with("model.n_spins")) {
                m.bad("n_spins", "missing");
            }
            1
        }
    }
}

fn parse_sweep(
    model: Option<Table>,
    sweep: Table,
    integrator: Option<Table>,
    errors: &mut Vec<String>,
) -> Option<RunConfig> {
    let mut spec = SweepSpec::new(Vec::new(), vec![1.0 / 3.0], 0.0, 0.0);
    let mut m = Reader::new("model", model, errors);
    spec.g = m.positive("g", 1.0);
    spec.kappa = m.non_negative("kappa", 0.0);
    spec.gamma_phi = m.non_negative("gamma_phi", 0.0);
    m.finish();

    let mut s = Reader::new("sweep", Some(sweep), errors);
    if !s.has("n_values") {
        s.bad("n_values", "missing");
    }
    spec.n_values = s.list("n_values", Vec::new(), as_usize);
    spec.lambda_ratios = s.list("lambda_ratios", spec.lambda_ratios, as_f64);
    spec.delta_tilde_over_chi = s.list("delta_tilde_over_chi", spec.delta_tilde_over_chi, as_f64);
    spec.e_beta_min = s.f64("e_beta_min", spec.e_beta_min);
    spec.e_beta_max = s.f64("e_beta_max", spec.e_beta_max);
    spec.e_beta_points = s.usize("e_beta_points", spec.e_beta_points);
    spec.t_max = s.f64("t_max", spec.t_max);
    spec.time_points = s.usize("time_points", spec.time_points);
    spec.refine_tol = s.f64("refine_tol", spec.refine_tol);
    spec.max_iter = s.usize("max_iter", spec.max_iter);
    s.finish();
    spec.integrator = parse_integrator(integrator, IntegratorOptions::lindblad_default(), errors);
    if let Err(Error::Config(list)) = spec.validate() {
        errors.extend(list.into_iter().map(|e| format!("sweep: {e}")));
    }
    Some(RunConfig::Sweep(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_constant() {
        let c = RunConfig::from_toml_str(
            r#"
            [model]
            n_spins = 20
            [protocol]
            kind = "constant"
            "#,
        )
        .unwrap();
        let RunConfig::Constant(s) = c else { panic!() };
        assert_eq!(s.preset, PresetKind::Itat);
        assert_eq!(s.drive.n_spins, 20);
        assert_eq!(s.grid.points, 121);
        assert!(s.integrator.is_none());
    }

    #[test]
    fn every_problem_is_listed() {
        let err = RunConfig::from_toml_str(
            r#"
            [model]
            n_spins = -3
            preset = "fancy"
            colour = "blue"
            kappa = -1.0
            [protocol]
            kind = "constant"
            points = 1
            speed = 3
            [integrator]
            rtol = "tight"
            [extra]
            "#,
        )
        .unwrap_err();
        let Error::Config(list) = err else { panic!() };
        let joined = list.join("\n");
        for key in [
            "model.n_spins",
            "model.preset",
            "model.colour",
            "model.kappa",
            "protocol.points",
            "protocol.speed",
            "integrator.rtol",
            "extra",
        ] {
            assert!(joined.contains(key), "{key} missing from\n{joined}");
        }
    }

    #[test]
    fn round_trip() {
        let texts = [
            r#"
            [model]
            n_spins = 12
            preset = "oat_z"
            e_beta = 30.0
            kappa = 0.5
            gamma_phi = 0.01
            [protocol]
            kind = "constant"
            t_max = 2.0
            points = 11
            echo = true
            dissipation = true
            initial = "coherent"
            theta = 1.0
            phi = 0.5
            [integrator]
            rtol = 1e-7
            "#,
            r#"
            [model]
            n_spins = 40
            [protocol]
            kind = "adiabatic"
            tau_chi = 10
            "#,
            r#"
            [model]
            kappa = 10
            gamma_phi = 0.02
            [sweep]
            n_values = [10, 20]
            lambda_ratios = [0.0, 0.3333333333333333]
            "#,
        ];
        for t in texts {
            let a = RunConfig::from_toml_str(t).unwrap();
            let b = RunConfig::from_toml_str(&a.to_toml_string()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn conflicting_drive_forms() {
        let err = RunConfig::from_toml_str(
            r#"
            [model]
            n_spins = 4
            e_beta = 10
            delta_c = 10
            [protocol]
            kind = "constant"
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("model.e_beta"));
    }
}

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use spinsq::checks::{self, Level};
use spinsq::config::RunConfig;
use spinsq::dynamics::POSITIVITY_GUARD;
use spinsq::figures::{self, FigureCurve};
use spinsq::linearized::{self, LinearizedParams};
use spinsq::metrics::{spin_moments, to_db, xi_r2, SqueezingTrace};
use spinsq::output::{self, Gate, Summary};
use spinsq::protocols::{run_adiabatic, run_constant_drive, sweep_optimize};
use spinsq::spin::{self, block_operators, sigma_operator, SpinSpace};
use spinsq::{Error, Result};

/// Files, gates and a JSON digest from one executed config.
struct Outcome {
    files: Vec<String>,
    gates: Vec<Gate>,
    incomplete: bool,
    result: Value,
}

fn trace_digest(trace: &SqueezingTrace, chi: f64) -> Value {
    match trace.min_point() {
        Some(p) => json!({
            "min_xi2": p.xi2,
            "min_xi2_db": p.xi2_db,
            "chi_t_opt": p.t * chi,
            "theta_opt": p.theta_opt,
        }),
        None => json!({ "min_xi2": null }),
    }
}

fn write(out: &Path, name: &str, bytes: Vec<u8>, files: &mut Vec<String>) -> Result<()> {
    fs::write(out.join(name), bytes)?;
    files.push(name.to_string());
    Ok(())
}

fn execute(config: &RunConfig, out: &Path, stem: &str, workers: Option<usize>) -> Result<Outcome> {
    let mut files = Vec::new();
    let mut gates = Vec::new();
    match config {
        RunConfig::Constant(spec) => {
            let r = run_constant_drive(spec)?;
            write(out, &format!("{stem}.csv"), output::trace_csv(&r.trace, r.params.chi)?, &mut files)?;
            let tol = if spec.dissipation { 1e-8 } else { 1e-9 };
            gates.push(Gate::new(
                "normalization",
                r.max_norm_error < tol,
                format!("max norm/trace error {:.3e}", r.max_norm_error),
            ));
            if let Some(min) = r.min_eigenvalue {
                gates.push(Gate::new(
                    "positivity",
                    min >= POSITIVITY_GUARD,
                    format!("smallest block eigenvalue {min:.3e}"),
                ));
            }
            let mut digest = trace_digest(&r.trace, r.params.chi);
            digest["params"] = serde_json::to_value(r.params)?;
            digest["drive"] = serde_json::to_value(r.drive)?;
            digest["warnings"] = json!(r.warnings);
            digest["integrator_stats"] = serde_json::to_value(r.stats)?;
            Ok(Outcome {
                files,
                gates,
                incomplete: false,
                result: digest,
            })
        }
        RunConfig::Adiabatic(spec) => {
            let r = run_adiabatic(spec)?;
            write(out, &format!("{stem}.csv"), output::trace_csv(&r.trace, r.chi)?, &mut files)?;
            if let Some(dark) = &r.dark_reference {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["t", "xi2_dark", "xi2_dark_db"]).map_err(Error::from)?;
                for (p, x) in r.trace.points.iter().zip(dark) {
                    w.write_record([format!("{}", p.t * r.chi), format!("{x}"), format!("{}", to_db(*x))])
                        .map_err(Error::from)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::from(e.into_error()))?;
                write(out, &format!("{stem}_dark_reference.csv"), bytes, &mut files)?;
            }
            gates.push(Gate::new(
                "magnus_converged",
                r.converged,
                format!("{} steps", r.magnus_steps),
            ));
            let last = r.trace.points.last().expect("non-empty trace");
            let mut digest = trace_digest(&r.trace, r.chi);
            digest["final_xi2"] = json!(last.xi2);
            digest["final_xi2_db"] = json!(last.xi2_db);
            digest["final_fidelity"] = json!(r.final_fidelity);
            digest["magnus_steps"] = json!(r.magnus_steps);
            digest["chi"] = json!(r.chi);
            Ok(Outcome {
                files,
                gates,
                incomplete: false,
                result: digest,
            })
        }
        RunConfig::Sweep(spec) => {
            let r = sweep_optimize(spec, workers)?;
            write(out, &format!("{stem}_rows.csv"), output::sweep_rows_csv(&r, spec.g)?, &mut files)?;
            write(out, &format!("{stem}_points.csv"), output::sweep_points_csv(&r)?, &mut files)?;
            gates.push(Gate::new(
                "sweep_complete",
                !r.incomplete,
                format!("{} rows, {} evaluations", r.rows.len(), r.points.len()),
            ));
            Ok(Outcome {
                files,
                gates,
                incomplete: r.incomplete,
                result: json!({ "rows": r.rows, "fits": r.fits }),
            })
        }
    }
}

fn print_gates(gates: &[Gate]) {
    for g in gates {
        println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
    }
}

fn finish(out: &Path, config: RunConfig, outcome: Outcome, started: Instant) -> Result<bool> {
    let mut summary = Summary::new(config, outcome.result);
    summary.files = outcome.files;
    summary.gates = outcome.gates;
    summary.incomplete = outcome.incomplete;
    summary.wall_clock_s = started.elapsed().as_secs_f64();
    output::write_json(&out.join("summary.json"), &summary)?;
    print_gates(&summary.gates);
    println!("wrote {} (+ summary.json)", summary.files.join(", "));
    Ok(summary.all_gates_pass())
}

pub fn simulate(config_path: &Path, out: &Path) -> Result<bool> {
    let config = RunConfig::from_path(config_path)?;
    if matches!(config, RunConfig::Sweep(_)) {
        return Err(Error::Config(vec!["sweep: use the `sweep` subcommand for [sweep] configs".into()]));
    }
    let started = Instant::now();
    output::ensure_dir(out)?;
    fs::write(out.join("config.toml"), config.to_toml_string())?;
    let outcome = execute(&config, out, "trace", None)?;
    finish(out, config, outcome, started)
}

pub fn sweep(config_path: &Path, out: &Path, workers: Option<usize>) -> Result<bool> {
    let config = RunConfig::from_path(config_path)?;
    if !matches!(config, RunConfig::Sweep(_)) {
        return Err(Error::Config(vec!["sweep: missing section (use `simulate` for [protocol] configs)".into()]));
    }
    let started = Instant::now();
    output::ensure_dir(out)?;
    fs::write(out.join("config.toml"), config.to_toml_string())?;
    let outcome = execute(&config, out, "sweep", workers)?;
    if let Some(fits) = outcome.result.get("fits").and_then(Value::as_array) {
        for f in fits {
            let (a, b) = (f["a"].as_f64().unwrap_or(f64::NAN), f["b"].as_f64().unwrap_or(f64::NAN));
            println!("fit {}: xi2 = {a:.4} C^(-{b:.4}) over {} points", f["label"], f["points"]);
        }
    }
    finish(out, config, outcome, started)
}

pub fn dark_state(n: usize, r: f64) -> Result<bool> {
    let space = SpinSpace::new(n)?;
    let psi = spin::dark_state(&space, r)?;
    let residual = sigma_operator(&block_operators(n as u32), r).apply(&psi)?.norm();
    let m = spin_moments(&psi);
    let xi2 = xi_r2(&m, n)?;
    println!("N                 {n}");
    println!("r                 {r}");
    println!("<Sx> <Sy> <Sz>    {:.6} {:.6} {:.6}", m.mean[0], m.mean[1], m.mean[2]);
    println!("xi_R^2            {xi2:.6e}");
    println!("xi_R^2 [dB]       {:.4}", to_db(xi2));
    println!("2/N               {:.6e}", 2.0 / n as f64);
    println!("|Sigma[r] psi|    {residual:.3e}");
    Ok(residual < 1e-10)
}

#[derive(Serialize)]
struct LinearizedRow {
    n: usize,
    cooperativity: f64,
    e_beta_opt: f64,
    chi_tilde: f64,
    gamma_big: f64,
    steady_state_variance: f64,
    min_xi2: f64,
}

pub fn linearized(n: usize, g: f64, kappa: f64, gamma_phi: f64) -> Result<bool> {
    let e = linearized::optimal_e_beta(n, g, kappa, gamma_phi)?;
    let p = LinearizedParams {
        n_spins: n,
        g,
        kappa,
        gamma_phi,
        e_beta: e,
    };
    let row = LinearizedRow {
        n,
        cooperativity: p.cooperativity(),
        e_beta_opt: e,
        chi_tilde: p.chi_tilde(),
        gamma_big: p.gamma_big(),
        steady_state_variance: linearized::steady_state_min_variance(&p),
        min_xi2: linearized::min_xi2(n, g, kappa, gamma_phi)?,
    };
    println!("N                      {}", row.n);
    println!("cooperativity C        {:.6}", row.cooperativity);
    println!("E_beta*                {:.6}", row.e_beta_opt);
    println!("chi~ at E_beta*        {:.6e}", row.chi_tilde);
    println!("Gamma at E_beta*       {:.6e}", row.gamma_big);
    println!("steady-state variance  {:.6}", row.steady_state_variance);
    println!("min xi^2 = sqrt(2/C)   {:.6}", row.min_xi2);
    println!("min xi^2 [dB]          {:.4}", to_db(row.min_xi2));
    Ok(true)
}

pub fn verify(level: Level) -> Result<bool> {
    let gates = checks::verify(level);
    print_gates(&gates);
    Ok(gates.iter().all(|g| g.passed))
}

#[derive(Serialize)]
struct ManifestEntry {
    figure: u8,
    curve: String,
    description: String,
    config: String,
    outputs: Vec<String>,
    gates_passed: bool,
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    code_version: &'static str,
    scale: &'static str,
    figure: u8,
    curves: Vec<ManifestEntry>,
    gates: Vec<Gate>,
}

/// Orderings the figure is meant to show.
fn figure_gates(which: u8, results: &[(FigureCurve, Value)]) -> Vec<Gate> {
    let min_of = |name: &str| -> Option<f64> {
        results
            .iter()
            .find(|(c, _)| c.curve == name)
            .and_then(|(_, v)| v["min_xi2"].as_f64())
    };
    let mut gates = Vec::new();
    match which {
        2 => {
            for n in [200, 500] {
                if let (Some(oat), Some(itat)) = (min_of(&format!("n{n}_oat")), min_of(&format!("n{n}_itat"))) {
                    gates.push(Gate::new(
                        format!("n{n}_itat_below_oat"),
                        itat < oat,
                        format!("ITAT {itat:.5} vs OAT {oat:.5}"),
                    ));
                }
            }
        }
        3 => {
            if let Some((_, v)) = results.first() {
                let rows = v["rows"].as_array().cloned().unwrap_or_default();
                let best = |n: u64, ratio: f64| {
                    rows.iter()
                        .find(|r| r["n"].as_u64() == Some(n) && r["lambda_ratio"].as_f64() == Some(ratio))
                        .and_then(|r| r["best_xi2"].as_f64())
                };
                for n in [10u64, 20, 30, 40] {
                    if let (Some(oat), Some(itat)) = (best(n, 0.0), best(n, 1.0 / 3.0)) {
                        gates.push(Gate::new(
                            format!("n{n}_itat_below_oat"),
                            itat < oat,
                            format!("ITAT {itat:.5} vs OAT {oat:.5}"),
                        ));
                    }
                }
            }
        }
        _ => {
            if let Some((_, v)) = results.iter().find(|(c, _)| c.curve == "n100_tau60") {
                let f = v["final_fidelity"].as_f64().unwrap_or(0.0);
                gates.push(Gate::new("n100_tau60_fidelity", f > 0.99, format!("overlap {f:.6}")));
            }
        }
    }
    gates
}

pub fn figures(which: u8, out: &Path, workers: Option<usize>) -> Result<bool> {
    let curves = figures::figure(which)?;
    let dir = out.join(format!("fig{which}"));
    output::ensure_dir(&dir.join("configs"))?;
    output::ensure_dir(&dir.join("data"))?;
    let mut entries = Vec::new();
    let mut all_gates = Vec::new();
    let mut results = Vec::new();
    for c in curves {
        let started = Instant::now();
        let cfg_rel = format!("configs/{}.toml", c.curve);
        fs::write(dir.join(&cfg_rel), c.config.to_toml_string())?;
        let outcome = execute(&c.config, &dir.join("data"), &c.curve, workers)?;
        let outputs: Vec<String> = outcome.files.iter().map(|f| format!("data/{f}")).collect();
        let passed = outcome.gates.iter().all(|g| g.passed);
        println!("{} ({:.1} s): {}", c.curve, started.elapsed().as_secs_f64(), outputs.join(", "));
        all_gates.extend(outcome.gates.iter().cloned().map(|mut g| {
            g.name = format!("{}:{}", c.curve, g.name);
            g
        }));
        let mut summary = Summary::new(c.config.clone(), outcome.result.clone());
        summary.files = outcome.files;
        summary.incomplete = outcome.incomplete;
        summary.gates = outcome.gates;
        summary.wall_clock_s = started.elapsed().as_secs_f64();
        output::write_json(&dir.join(format!("data/{}.json", c.curve)), &summary)?;
        entries.push(ManifestEntry {
            figure: c.figure,
            curve: c.curve.clone(),
            description: c.description.clone(),
            config: cfg_rel,
            outputs,
            gates_passed: passed,
        });
        results.push((c, outcome.result));
    }
    all_gates.extend(figure_gates(which, &results));
    print_gates(&all_gates);
    let ok = all_gates.iter().all(|g| g.passed);
    let manifest = Manifest {
        schema_version: output::SCHEMA_VERSION,
        code_version: output::CODE_VERSION,
        scale: "desk",
        figure: which,
        curves: entries,
        gates: all_gates,
    };
    output::write_json(&dir.join("manifest.json"), &manifest)?;
    println!("manifest: {}", dir.join("manifest.json").display());
    Ok(ok)
}

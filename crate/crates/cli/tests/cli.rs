use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spinsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinsq"))
        .args(args)
        .env_remove("SPINSQ_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const COHERENT: &str = r#"
[model]
n_spins = 12
preset = "itat"
e_beta = 20.0
lambda_ratio = 0.3333333333333333

[protocol]
kind = "constant"
t_max = 2.0
points = 41
echo = true
"#;

const DISSIPATIVE: &str = r#"
[model]
n_spins = 8
preset = "oat_z"
e_beta = 30.0
lambda_ratio = 0.0
kappa = 10.0
gamma_phi = 0.02

[protocol]
kind = "constant"
t_max = 4.0
points = 41
dissipation = true
"#;

const SWEEP: &str = r#"
[model]
kappa = 10.0
gamma_phi = 0.02

[sweep]
n_values = [4, 6]
lambda_ratios = [0.0, 0.3333333333333333]
time_points = 41
"#;

#[test]
fn linearized_table() {
    let out = spinsq(&["linearized", "--n", "100", "--kappa", "10", "--gamma-phi", "0.02"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("223.606798"), "{text}");
    assert!(text.contains(&format!("{:.6}", (2.0f64 / 500.0).sqrt())), "{text}");
}

#[test]
fn linearized_without_dephasing_is_an_error() {
    let out = spinsq(&["linearized", "--n", "10", "--kappa", "10", "--gamma-phi", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_quick_passes() {
    let out = spinsq(&["verify", "--level", "quick"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}

#[test]
fn dark_state_reports_residual() {
    let out = spinsq(&["dark-state", "--n", "10", "--r", "2"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("|Sigma[r] psi|"));
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("coherent.toml", COHERENT), ("dissipative.toml", DISSIPATIVE)] {
        let cfg = write(dir.path(), name, body);
        let a = dir.path().join(format!("{name}.a"));
        let b = dir.path().join(format!("{name}.b"));
        for out in [&a, &b] {
            let o = spinsq(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
        let ta = fs::read(a.join("trace.csv")).unwrap();
        assert_eq!(ta, fs::read(b.join("trace.csv")).unwrap());
        assert!(String::from_utf8_lossy(&ta).starts_with("t,sx,sy,sz,var_min,theta_opt,xi2,xi2_db\n"));
        let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["schema_version"], 1);
        assert_eq!(summary["incomplete"], false);
        // the written config reproduces the run
        let again = dir.path().join(format!("{name}.c"));
        let o = spinsq(&[
            "simulate",
            "--config",
            a.join("config.toml").to_str().unwrap(),
            "--out",
            again.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert_eq!(ta, fs::read(again.join("trace.csv")).unwrap());
    }
}

#[test]
fn sweep_is_invariant_to_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", SWEEP);
    let mut rows = Vec::new();
    for w in ["1", "3"] {
        let out = dir.path().join(format!("w{w}"));
        let o = spinsq(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", w]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        rows.push((fs::read(out.join("sweep_rows.csv")).unwrap(), fs::read(out.join("sweep_points.csv")).unwrap()));
    }
    assert_eq!(rows[0], rows[1]);
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "[model]\nn_spins = 0\nbogus = 1\n[protocol]\nkind = \"constant\"\ndissipation = true\ndispersive = true\n",
    );
    let o = spinsq(&["simulate", "--config", &bad, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus"), "{err}");

    let missing = dir.path().join("absent.toml");
    let o = spinsq(&["simulate", "--config", missing.to_str().unwrap(), "--out", dir.path().join("p").to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));

    let sweep = write(dir.path(), "sweep.toml", SWEEP);
    let o = spinsq(&["simulate", "--config", &sweep, "--out", dir.path().join("q").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

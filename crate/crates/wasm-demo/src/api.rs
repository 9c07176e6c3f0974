use serde::Serialize;

use spinsq::error::{Error, Result};
use spinsq::figures::coherent_spec;
use spinsq::metrics::{spin_moments, to_db, xi_r2};
use spinsq::protocols::{run_constant_drive, RampSchedule};
use spinsq::spin::{dark_state, SpinSpace};

pub const MAX_SPINS: usize = 400;
pub const MAX_POINTS: usize = 2001;

#[derive(Serialize)]
pub struct Curve {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Serialize)]
struct CoherentOut {
    n_spins: usize,
    lambda_ratio: f64,
    echo: bool,
    min_xi2: f64,
    min_xi2_db: f64,
    t_opt: f64,
    xi2_db: Curve,
}

#[derive(Serialize)]
struct DarkOut {
    n_spins: usize,
    two_over_n_db: f64,
    xi2_db: Curve,
}

#[derive(Serialize)]
struct RampOut {
    r_f: f64,
    r: Curve,
    /// `tau Im lambda`
    lambda_im: Curve,
    /// `Delta_c / E_beta`
    delta_c: Curve,
    /// `Re lambda / E_beta`
    lambda_re: Curve,
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SPINS {
        return Err(Error::InvalidParameter(format!("N must be in 1..={MAX_SPINS}, got {n}")));
    }
    Ok(())
}

fn check_points(points: usize) -> Result<()> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(Error::InvalidParameter(format!("points must be in 2..={MAX_POINTS}, got {points}")));
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string(v)?)
}

pub fn coherent_trace(n: usize, lambda_ratio: f64, echo: bool) -> Result<String> {
    check_n(n)?;
    let mut spec = coherent_spec(n, lambda_ratio, echo, false)?;
    spec.grid.t_max = 20.0;
    spec.grid.points = 401;
    let res = run_constant_drive(&spec)?;
    let scale = n as f64 * res.params.chi_tilde;
    let best = res
        .trace
        .min_point()
        .ok_or_else(|| Error::InvalidParameter("empty trace".into()))?;
    json(&CoherentOut {
        n_spins: n,
        lambda_ratio,
        echo,
        min_xi2: best.xi2,
        min_xi2_db: best.xi2_db,
        t_opt: best.t * scale,
        xi2_db: Curve {
            label: format!("lambda / delta_c = {lambda_ratio:.3}"),
            x: res.trace.points.iter().map(|p| p.t * scale).collect(),
            y: res.trace.points.iter().map(|p| p.xi2_db).collect(),
        },
    })
}

pub fn dark_state_curve(n: usize, r_max: f64, points: usize) -> Result<String> {
    check_n(n)?;
    check_points(points)?;
    if !(r_max > 0.0 && r_max <= 6.0) {
        return Err(Error::InvalidParameter(format!("r_max must be in (0, 6], got {r_max}")));
    }
    let space = SpinSpace::new(n)?;
    let mut x = Vec::with_capacity(points);
    let mut y = Vec::with_capacity(points);
    for k in 0..points {
        let r = r_max * k as f64 / (points - 1) as f64;
        let psi = dark_state(&space, r)?;
        x.push(r);
        y.push(to_db(xi_r2(&spin_moments(&psi), n)?));
    }
    json(&DarkOut {
        n_spins: n,
        two_over_n_db: to_db(2.0 / n as f64),
        xi2_db: Curve {
            label: format!("dark state, N = {n}"),
            x,
            y,
        },
    })
}

pub fn ramp_schedule(r_f: f64, points: usize) -> Result<String> {
    check_points(points)?;
    let s = RampSchedule::new(r_f, 1.0, 1.0)?;
    let x: Vec<f64> = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
    let curve = |label: &str, f: &dyn Fn(f64) -> f64| Curve {
        label: label.into(),
        x: x.clone(),
        y: x.iter().map(|&t| f(t)).collect(),
    };
    json(&RampOut {
        r_f,
        r: curve("r", &|t| s.r(t)),
        lambda_im: curve("tau Im lambda", &|t| s.lambda_im(t)),
        delta_c: curve("Delta_c / E_beta", &|t| s.delta_c(t)),
        lambda_re: curve("Re lambda / E_beta", &|t| s.lambda_re(t)),
    })
}

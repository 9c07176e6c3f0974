use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod run;

#[derive(Parser)]
#[command(name = "spinsq", version, about = "Collective spin squeezing with a parametrically driven cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a constant-drive or adiabatic protocol from a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize the dissipative protocol over E_beta and time, then fit xi^2 = a C^-b.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (overridden by SPINSQ_THREADS).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Squeezing of the dark state of Sigma[r].
    DarkState {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: f64,
    },
    /// Closed-form small-fluctuation predictions.
    Linearized {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kappa: f64,
        #[arg(long = "gamma-phi")]
        gamma_phi: f64,
        #[arg(long, default_value_t = 1.0)]
        g: f64,
    },
    /// Internal oracle gates.
    Verify {
        #[arg(long, value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
    /// Emit the datasets behind a figure, with a manifest of configs.
    Figures {
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
        which: u8,
        #[arg(long, value_enum, default_value_t = Scale::Desk)]
        scale: Scale,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Desk,
}

/// `SPINSQ_THREADS` takes precedence over `--workers`.
fn workers(flag: Option<usize>) -> Option<usize> {
    std::env::var("SPINSQ_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .or(flag)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { config, out } => run::simulate(&config, &out),
        Command::Sweep { config, out, workers: w } => run::sweep(&config, &out, workers(w)),
        Command::DarkState { n, r } => run::dark_state(n, r),
        Command::Linearized { n, kappa, gamma_phi, g } => run::linearized(n, g, kappa, gamma_phi),
        Command::Verify { level } => run::verify(match level {
            LevelArg::Quick => spinsq::checks::Level::Quick,
            LevelArg::Full => spinsq::checks::Level::Full,
        }),
        Command::Figures {
            which,
            scale: Scale::Desk,
            out,
            workers: w,
        } => run::figures(which, &out, workers(w)),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more internal gates failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                spinsq::Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

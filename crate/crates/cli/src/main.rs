use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kerr_wra_cli::run::{execute, Command, RunOptions};

/// Helicity phase transport for photons in Kerr spacetime.
#[derive(Parser)]
#[command(name = "kerr-wra", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long, short, env = "KERR_WRA_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, short, default_value_t = 0)]
    jobs: usize,
    /// Multiplies every integration tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Sub {
    /// Per-photon trajectories, WRA traces and symmetry reports.
    Trace(Common),
    /// One summary row per launch ratio.
    Sweep(Common),
    /// Two-arm interferometer over the alpha grid.
    Interferometer(Common),
    /// Invariant checks; exits 1 when any fails.
    Validate(Common),
}

fn main() -> ExitCode {
    let (command, c) = match Cli::parse().command {
        Sub::Trace(c) => (Command::Trace, c),
        Sub::Sweep(c) => (Command::Sweep, c),
        Sub::Interferometer(c) => (Command::Interferometer, c),
        Sub::Validate(c) => (Command::Validate, c),
    };
    let opts = RunOptions { out: c.out, jobs: c.jobs, tol_scale: c.tol_scale };
    match execute(command, &c.config, &opts) {
        Ok(m) => {
            let failed = m.failures();
            eprintln!("{}: {} runs, {failed} failed, {} outputs", m.command, m.runs.len(), m.outputs.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("kerr-wra: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

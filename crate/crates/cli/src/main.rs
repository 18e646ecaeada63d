use std::path::PathBuf;
use std::process::ExitCode;

use ancgeom_cli::{run, Command, Overrides, RunConfig};
use clap::Parser;

/// Numerical checks of Sobolev and isoperimetric inequalities on manifolds
/// with asymptotically nonnegative curvature.
///
/// Exit status: 0 when clean, 2 when a counterexample is flagged, 1 on
/// input or numerical errors.
#[derive(Debug, Parser)]
#[command(name = "ancgeom", version)]
struct Cli {
    /// Command to run; may instead be given as `command` in the config.
    #[arg(value_enum)]
    command: Option<Command>,

    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Seed for randomized runs.
    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, allow_negative_numbers = true)]
    tol_quad: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    tol_ode: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    tol_theta: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        command: cli.command,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        quad_tol: cli.tol_quad,
        ode_tol: cli.tol_ode,
        theta_tol: cli.tol_theta,
    };
    let outcome = RunConfig::load(&overrides).and_then(|config| run(&config));
    match outcome {
        Ok(o) => {
            for f in &o.files {
                println!("{}", f.display());
            }
            if o.counterexamples > 0 {
                eprintln!("counterexample flags: {}", o.counterexamples);
            }
            ExitCode::from(o.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

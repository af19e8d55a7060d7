use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recoilslit_cli::{run, Command, Overrides, Scenario};

/// Simulator for a recoiling-slit interferometer with a tunable trapped-atom slit.
#[derive(Parser)]
#[command(name = "recoilslit", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Scenario JSON; omitted keys take their defaults.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides dynamics.n_samples.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Closed-form Δp, η and visibility across trap depths.
    VisibilityScan,
    /// Time-binned visibility under photon scattering, with Wigner snapshots.
    Dynamics,
    /// Sideband-ratio thermometry on a synthetic or measured spectrum.
    Thermometry,
    /// Sinusoidal fit of a synthetic or measured fringe.
    Fringe,
    /// Phase-lock residual simulation.
    LockSim,
    /// Print the default scenario and exit.
    DefaultScenario,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = match cli.command {
        Cmd::VisibilityScan => Command::VisibilityScan,
        Cmd::Dynamics => Command::Dynamics,
        Cmd::Thermometry => Command::Thermometry,
        Cmd::Fringe => Command::Fringe,
        Cmd::LockSim => Command::LockSim,
        Cmd::DefaultScenario => {
            print!("{}", Scenario::default().to_json());
            return ExitCode::SUCCESS;
        }
    };
    let scenario = match &cli.scenario {
        Some(p) => Scenario::load(p),
        None => Ok(Scenario::default()),
    };
    let result = scenario.and_then(|mut sc| {
        Overrides { seed: cli.seed, samples: cli.samples }.apply(&mut sc);
        run(cmd, &sc, &cli.out)
    });
    match result {
        Ok(report) => {
            print!("{}", report.summary);
            println!("wrote {} files to {}", report.record.outputs.len(), cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thinmag::harness::{self, Experiment, RunConfig};
use thinmag::Error;

/// Quasistatic magnetoelastic thin-film experiments.
#[derive(Parser, Debug)]
#[command(name = "thinmag", version)]
struct Cli {
    /// Force every parallel loop onto one thread.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// TOML run configuration; the built-in defaults when omitted.
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Static minimization at t = 0 without dissipation.
    Static(ConfigArg),
    /// Incremental evolution with trajectory, audit and snapshots.
    Evolve(ConfigArg),
    /// Bulk minima against the plate limit over `geometry.h_list`.
    GammaSweep(ConfigArg),
    /// FFT stray energy of extruded films against the thin-film surrogate.
    StrayDiag(ConfigArg),
    /// Invariant suites on small grids; writes validate.json.
    Validate(ConfigArg),
    /// Runs the experiment named in the configuration.
    Run(ConfigArg),
    /// Prints the default configuration.
    Defaults,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) => EXIT_CONFIG,
        Error::NonConvergence { .. } => EXIT_SOLVER,
        Error::Material { .. } | Error::GridMismatch(_) => EXIT_INVARIANT,
        Error::Io(_) => 1,
    }
}

fn load(arg: &ConfigArg) -> Result<RunConfig, Error> {
    match &arg.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn execute(cfg: &RunConfig, experiment: Option<Experiment>, deterministic: bool) -> Result<u8, Error> {
    let outcome = if deterministic {
        thinmag::par::run_sequential(|| harness::run(cfg, experiment))?
    } else {
        harness::run(cfg, experiment)?
    };
    let dir = cfg.output_path();
    for path in outcome.artifacts.write(&dir)? {
        println!("wrote {}", path.display());
    }
    println!("{}: {}", outcome.experiment.name(), outcome.summary);
    Ok(if outcome.invariants_hold { 0 } else { EXIT_INVARIANT })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (arg, experiment) = match &cli.command {
        Command::Static(a) => (a, Some(Experiment::Static)),
        Command::Evolve(a) => (a, Some(Experiment::Evolve)),
        Command::GammaSweep(a) => (a, Some(Experiment::GammaSweep)),
        Command::StrayDiag(a) => (a, Some(Experiment::StrayDiag)),
        Command::Validate(a) => (a, Some(Experiment::Validate)),
        Command::Run(a) => (a, None),
        Command::Defaults => {
            print!("{}", RunConfig::default().canonical());
            return ExitCode::SUCCESS;
        }
    };
    let result = load(arg).and_then(|cfg| execute(&cfg, experiment, cli.deterministic));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

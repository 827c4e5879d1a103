//! Command-line front end for the `velojump` toolkit.
//!
//! `velojump <subcommand> --config run.toml --out DIR [--seed N] [--threads N]`
//!
//! Exit codes: 0 success, 1 output failure, 2 config error, 3 numerical
//! failure. Failures print one JSON object (`schema = "error/1"`) on stderr.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "velojump", version, about = "Effective Hamiltonians, kinetic limits and velocity jump simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides the config.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// H, μ−1, regime and ∇H along a ray of momenta.
    Hamiltonian,
    /// Distance to the singular set along each configured direction.
    SingBoundary,
    /// Eigenvalue and eigen-measure at the configured momenta.
    Eigen,
    /// Legendre transform L at the configured velocities.
    Legendre,
    /// Hamilton-Jacobi solve (Lax-Friedrichs or Hopf-Lax).
    HjSolve,
    /// Kinetic equation in the Hopf-Cole variables at one ε.
    KineticSolve,
    /// ε-sweep against the Hopf-Lax limit.
    Converge,
    /// Velocity jump paths and the drift check.
    Simulate,
    /// Both Hamiltonian profiles of the uniform interval and 3-ball.
    Figure1,
}

/// Runs one subcommand with a parsed config.
pub fn run(command: Command, cfg: &RunConfig, out: &Path, seed: u64) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::Hamiltonian => commands::hamiltonian(cfg, out),
        Command::SingBoundary => commands::sing_boundary(cfg, out),
        Command::Eigen => commands::eigen(cfg, out),
        Command::Legendre => commands::legendre(cfg, out),
        Command::HjSolve => commands::hj_solve(cfg, out),
        Command::KineticSolve => commands::kinetic(cfg, out),
        Command::Converge => commands::converge(cfg, out),
        Command::Simulate => commands::simulate(cfg, out, seed),
        Command::Figure1 => commands::figure1(cfg, out),
    }
}

fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if cli.command == Command::Figure1 => RunConfig::default(),
        None => return Err(CliError::Config("--config is required".into())),
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    let threads = cli.threads.unwrap_or(cfg.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    pool.install(|| run(cli.command, &cfg, &cli.out, seed))
}

/// Parses `args`, runs, reports, and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Config(e.kind().to_string());
            eprintln!("{e}");
            eprintln!("{}", serde_json::to_string(&err.report()).unwrap_or_default());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(err) => {
            eprintln!("{}", serde_json::to_string(&err.report()).unwrap_or_default());
            err.exit_code()
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::{CliError, Outcome};

#[derive(Parser, Debug)]
#[command(name = "stadium", version, about = "Stadium billiard experiments")]
struct Cli {
    #[command(flatten)]
    config: ExperimentConfig,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Constants and inequality chain of the entropy bound.
    Bounds,
    /// Exact signed-composition counts with their analytic bound.
    Compositions,
    /// Iterate the billiard map from a phase point.
    Orbit {
        /// Arc-length position, measured counterclockwise from (0, -1).
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        /// Angle from the inward normal, counterclockwise positive.
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
    },
    /// Sampled word complexity, special words and entropy estimate.
    Complexity,
    /// Saddle connection search with uniqueness and counting audit.
    Saddles,
    /// Run everything and emit one JSON bundle.
    Report,
}

#[derive(Args, Debug, Clone)]
pub struct ExperimentConfig {
    /// Length of the flat sides.
    #[arg(long, global = true, default_value_t = 2.0)]
    pub l: f64,
    #[arg(long, global = true, default_value_t = 12)]
    pub n_max: usize,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Launch-parameter grid points per corner family.
    #[arg(long, global = true, default_value_t = 200_000)]
    pub grid: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, global = true, default_value_t = 40)]
    pub j_max: usize,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV or text.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true, env = "STADIUM_THREADS")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), CliError> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(CliError::Usage(format!("--l must be positive, got {}", self.l)));
        }
        for (name, v) in [
            ("--n-max", self.n_max),
            ("--samples", self.samples),
            ("--grid", self.grid),
            ("--max-len", self.max_len),
            ("--j-max", self.j_max),
        ] {
            if v < 1 {
                return Err(CliError::Usage(format!("{name} must be at least 1")));
            }
        }
        if !(self.tol > 0.0 && self.tol <= 1e-6) {
            return Err(CliError::Usage(format!("--tol must lie in (0, 1e-6], got {}", self.tol)));
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let cfg = &cli.config;
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.into()))?;
    }
    match cli.command {
        Command::Bounds => commands::bounds(cfg),
        Command::Compositions => commands::compositions(cfg),
        Command::Orbit { s, theta, steps } => commands::orbit(cfg, s, theta, steps),
        Command::Complexity => commands::complexity(cfg),
        Command::Saddles => commands::saddles(cfg),
        Command::Report => commands::report(cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! `nstable`: batch experiments with JSON reports.
//!
//! Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 configuration
//! error, 3 numerical-domain error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<nstable::Error> for CliError {
    fn from(e: nstable::Error) -> Self {
        if e.is_numerical() { Self::Numerical(e.to_string()) } else { Self::Config(e.to_string()) }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "nstable", version, about = "Random-stable laws, PGF semigroups and branching simulation")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Random sum of --N copies of --X against c·X.
    VerifyStability(Flags),
    /// PGF-ness of L(c·L⁻¹(s)) across --c-grid.
    SemigroupScan(Flags),
    /// Commutation gap of two --N families, or of the maps of --L at each --c-grid scale.
    CommuteCheck(Flags),
    /// Galton–Watson trajectories with offspring --N.
    SimulateBgw(Flags),
    /// Continuous-time branching with brood law --H up to --t.
    SimulateCtbp(Flags),
    /// Draws from --X checked against its transform.
    Sample(Flags),
    /// Scaling limits: BGW (--N, --L), continuous time (--H) or weak limits (--unit).
    LimitCheck(Flags),
    /// Runs the experiment described by --config.
    Run(Flags),
    /// Prints every named family, law, transform and brood law.
    List,
}

#[derive(Args, Default)]
struct Flags {
    /// Counting or offspring family, e.g. geometric:p=0.5 (repeatable).
    #[arg(long = "N")]
    counts: Vec<String>,
    /// Summand law, e.g. exp1 or linnik:alpha=1.5,beta=1.
    #[arg(long = "X")]
    law: Option<String>,
    /// Laplace transform, e.g. cosh or gamma:shape=0.6667.
    #[arg(long = "L")]
    transform: Option<String>,
    /// Brood law, e.g. yuleH or thetaH:theta=0.5,q=0.2.
    #[arg(long = "H")]
    generator: Option<String>,
    /// Summand law for weak limits: exp1 or rademacher.
    #[arg(long)]
    unit: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    /// `a..b[,step]` or a comma list.
    #[arg(long = "c-grid")]
    c_grid: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Series truncation order.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    /// Overrides the verdict threshold where one applies.
    #[arg(long)]
    tol: Option<f64>,
    /// Caps worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV sample dump, one column per replica.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn resolve(self, command: Option<Command>) -> Result<ExperimentConfig, CliError> {
        let mut config = match (&self.config, command) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(command)) => ExperimentConfig::new(command),
            (None, None) => return Err(CliError::Config("run requires --config".into())),
        };
        if let Some(command) = command {
            config.command = command;
        }
        if !self.counts.is_empty() {
            config.counts = self.counts;
        }
        macro_rules! overlay {
            ($($field:ident),*) => { $( if self.$field.is_some() { config.$field = self.$field; } )* };
        }
        overlay!(law, transform, generator, unit, c, c_grid, n, order, generations, t, tol, threads, out, csv);
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    let (flags, command) = match cli.command {
        Sub::List => {
            print!("{}", nstable::catalog::list_catalog());
            return Ok(true);
        }
        Sub::Run(f) => (f, None),
        Sub::VerifyStability(f) => (f, Some(Command::VerifyStability)),
        Sub::SemigroupScan(f) => (f, Some(Command::SemigroupScan)),
        Sub::CommuteCheck(f) => (f, Some(Command::CommuteCheck)),
        Sub::SimulateBgw(f) => (f, Some(Command::SimulateBgw)),
        Sub::SimulateCtbp(f) => (f, Some(Command::SimulateCtbp)),
        Sub::Sample(f) => (f, Some(Command::Sample)),
        Sub::LimitCheck(f) => (f, Some(Command::LimitCheck)),
    };
    let config = flags.resolve(command)?;
    if let Some(threads) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    Ok(commands::execute(&config)?.all_passed())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("nstable: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end: `simulate`, `analyze` and `report`.
//!
//! Exit codes: 0 success, 1 analysis error (any trial failed), 2 usage or I/O error.

pub mod analyze;
pub mod config;
pub mod output;
pub mod report;
pub mod simulate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use lapswim_core::energetics::FitSpace;

pub use analyze::cmd_analyze;
pub use config::{Emit, Overrides, RunConfig};
pub use report::cmd_report;
pub use simulate::cmd_simulate;

/// Errors mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Analysis(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Analysis(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Analysis(e) => write!(f, "{e:#}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lapswim", version, about = "Kinematics, dead reckoning and energetics of tagged lap-swimming dolphins")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic tag CSV and its ground truth.
    Simulate {
        /// Scenario TOML; keys override the preset or the default scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Animal-parameterised scenario: TT01, TT02 or TT03.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        laps: Option<usize>,
        /// Zero all sensor noise.
        #[arg(long)]
        noise_free: bool,
        #[arg(long, default_value = ".")]
        output: PathBuf,
    },
    /// Analyse tag CSVs and write per-trial artifacts.
    Analyze {
        /// Tag CSV files (override `inputs` in the config).
        inputs: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Animal preset: TT01, TT02 or TT03.
        #[arg(long)]
        animal: Option<String>,
        /// Lagoon outline GeoJSON.
        #[arg(long)]
        boundary: Option<PathBuf>,
        /// Dead-reckoning start `x,y` in metres.
        #[arg(long, value_parser = parse_xy)]
        station: Option<[f64; 2]>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Artifact groups to write (comma separated).
        #[arg(long, value_delimiter = ',')]
        emit: Option<Vec<Emit>>,
        /// Trials analysed in parallel; 0 uses every core.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_parser = parse_fit_space)]
        fit_space: Option<FitSpace>,
    },
    /// Summarise a finished run directory.
    Report {
        run_dir: PathBuf,
    },
}

fn parse_xy(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [x, y] => Ok([
            x.trim().parse().map_err(|e| format!("bad x `{x}`: {e}"))?,
            y.trim().parse().map_err(|e| format!("bad y `{y}`: {e}"))?,
        ]),
        _ => Err(format!("expected `x,y`, got `{s}`")),
    }
}

fn parse_fit_space(s: &str) -> Result<FitSpace, String> {
    match s {
        "linear" => Ok(FitSpace::Linear),
        "log" => Ok(FitSpace::Log),
        _ => Err(format!("expected `linear` or `log`, got `{s}`")),
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, preset, seed, laps, noise_free, output } => {
            let sc = config::resolve_scenario(scenario.as_deref(), preset.as_deref(), seed, laps, noise_free)
                .map_err(CliError::Usage)?;
            let files = cmd_simulate(&sc, &output).map_err(CliError::Usage)?;
            println!("{}", files.tag.display());
            println!("{}", files.truth.display());
            Ok(())
        }
        Command::Analyze { inputs, config, animal, boundary, station, output, emit, jobs, fit_space } => {
            let ov = Overrides { inputs, preset: animal, boundary, station, output, emit, jobs, fit_space };
            let resolved = RunConfig::resolve(config.as_deref(), ov).map_err(CliError::Usage)?;
            let outcomes = cmd_analyze(resolved)?;
            let mut failed = 0;
            for o in &outcomes {
                match &o.result {
                    Ok(s) => println!("{}\tok\t{} laps", o.name, s.laps),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{}\terror\t{e}", o.name);
                    }
                }
            }
            if failed > 0 {
                return Err(CliError::Analysis(anyhow::anyhow!("{failed} of {} trials failed", outcomes.len())));
            }
            Ok(())
        }
        Command::Report { run_dir } => {
            for p in cmd_report(&run_dir)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mom_tournament::harness::{emit, run_experiment_with_threads, to_csv_string, to_json_string, ExperimentConfig, OutputFormat};
use mom_tournament::problems::PROBLEM_KINDS;
use mom_tournament::Error;

/// Monte-Carlo experiments for median-of-means tournaments.
#[derive(Parser)]
#[command(name = "mom-tournament", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a config file without running it.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// List the built-in problem kinds.
    ListProblems,
}

#[derive(Args)]
struct Overrides {
    /// Root seed of the sweep.
    #[arg(long, env = "MOMT_SEED")]
    seed: Option<u64>,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Output file; stdout when neither this nor the config names one.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; output does not depend on this.
    #[arg(long, env = "MOMT_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        config.trials = trials;
    }
    if let Some(out) = &overrides.out {
        config.output = Some(out.clone());
    }
    if let Some(format) = overrides.format {
        config.format = match format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    config.validate()?;
    Ok(config)
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::ListProblems => {
            for (kind, summary) in PROBLEM_KINDS {
                println!("{kind:<18} {summary}");
            }
            Ok(())
        }
        Command::Validate { config, overrides } => {
            load(&config, &overrides)?;
            println!("ok");
            Ok(())
        }
        Command::Run { config, overrides } => {
            let config = load(&config, &overrides)?;
            let table = run_experiment_with_threads(&config, overrides.threads)?;
            match &config.output {
                Some(path) => emit(&table, config.format, path),
                None => {
                    let text = match config.format {
                        OutputFormat::Csv => to_csv_string(&table)?,
                        OutputFormat::Json => to_json_string(&table)?,
                    };
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(EXIT_IO),
                _ => ExitCode::from(EXIT_CONFIG),
            }
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cfsat::harness::{emit_results, run_experiment, ExperimentKind, OutputFormat, RawConfig};
use cfsat::harness::config::load_raw_config;
use cfsat::Error;

#[derive(Parser)]
#[command(name = "cfsat", version, about = "Cooperative multi-satellite downlink precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result table.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `experiment.name`.
        #[arg(long)]
        experiment: Option<ExperimentKind>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte-Carlo trials per exact-rate evaluation.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        /// Fill the wall_ms column (output then differs between runs).
        #[arg(long)]
        timing: bool,
    },
    /// Check a configuration file without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the resolved configuration (defaults when no file is given).
    Describe {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Exit status 1 for anything wrong with the configuration, 2 for failures
/// while running.
struct Failure {
    code: u8,
    error: Error,
}

fn config_stage(error: Error) -> Failure {
    Failure { code: 1, error }
}

fn run_stage(error: Error) -> Failure {
    let code = match error {
        Error::InvalidConfig(_) | Error::ConfigParse { .. } => 1,
        _ => 2,
    };
    Failure { code, error }
}

fn raw(config: Option<&Path>) -> cfsat::Result<RawConfig> {
    match config {
        Some(p) => load_raw_config(p),
        None => Ok(RawConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            experiment,
            seed,
            trials,
            out,
            threads,
            format,
            timing,
        } => {
            let mut raw = raw(config.as_deref()).map_err(config_stage)?;
            if let Some(e) = experiment {
                if raw.experiment.name != e {
                    raw.experiment.name = e;
                    raw.experiment.sweep = None;
                }
            }
            if let Some(s) = seed {
                raw.seed = s;
                raw.experiment.seed = Some(s);
            }
            if let Some(t) = trials {
                raw.experiment.trials = t;
            }
            raw.experiment.timing |= timing;
            if threads == Some(0) {
                return Err(config_stage(Error::InvalidConfig("--threads must be >= 1".into())));
            }
            let (cfg, spec) = raw.resolve().map_err(config_stage)?;
            let outcome = run_experiment(&cfg, &spec, threads).map_err(run_stage)?;
            for f in &outcome.failures {
                eprintln!("point {} {:?} failed: {}", f.point, f.params, f.message);
            }
            for p in emit_results(&outcome, format, &out).map_err(run_stage)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            load_raw_config(&config).and_then(|r| r.resolve()).map_err(config_stage)?;
            println!("{}: ok", config.display());
            Ok(())
        }
        Command::Describe { config } => {
            let raw = raw(config.as_deref()).map_err(config_stage)?;
            raw.resolve().map_err(config_stage)?;
            let text = toml::to_string_pretty(&raw).map_err(|e| run_stage(Error::Serialize(e.to_string())))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error}");
            ExitCode::from(code)
        }
    }
}

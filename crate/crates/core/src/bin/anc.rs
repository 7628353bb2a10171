use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use spatial_anc::anc::Method;
use spatial_anc::config::{validate_config, RunConfig, Sweep};
use spatial_anc::harness::{run_experiment, Experiment, Overrides};

/// Mode-domain spatial ANC simulator.
///
/// Log verbosity is controlled by the ANC_LOG environment variable
/// (error, warn, info, debug, trace).
#[derive(Debug, Parser)]
#[command(name = "anc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one of the canned experiments and write CSV files.
    Run {
        #[arg(value_enum)]
        experiment: ExperimentArg,
        /// TOML configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Frequency sweep as start:stop:step in Hz.
        #[arg(long, value_parser = Sweep::parse)]
        freq_range: Option<Sweep>,
        /// Number of reference microphones.
        #[arg(long)]
        ref_mics: Option<usize>,
        /// Methods to run: mdff, l1, irls-p<p>. Repeat or separate with commas.
        #[arg(long = "method", value_delimiter = ',', value_parser = parse_method)]
        methods: Vec<Method>,
    },
    /// Validate a configuration file and print it with defaults filled in.
    Validate { config: PathBuf },
    /// Print the built-in default configuration.
    Defaults,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Fig1,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Fig1 => Experiment::Fig1,
            ExperimentArg::Fig3 => Experiment::Fig3,
            ExperimentArg::Fig4 => Experiment::Fig4,
            ExperimentArg::Fig5 => Experiment::Fig5,
            ExperimentArg::Fig6 => Experiment::Fig6,
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: spatial_anc::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANC_LOG", "warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            experiment,
            config,
            out,
            freq_range,
            ref_mics,
            methods,
        } => {
            let base = match config {
                Some(path) => match validate_config(&path) {
                    Ok(cfg) => cfg,
                    Err(e) => {
                        eprint!("{e}");
                        return ExitCode::FAILURE;
                    }
                },
                None => RunConfig::default(),
            };
            let overrides = Overrides {
                sweep: freq_range,
                ref_mics,
                methods: (!methods.is_empty()).then_some(methods),
            };
            let cfg = match overrides.apply(&base) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprint!("{e}");
                    return ExitCode::FAILURE;
                }
            };
            match run_experiment(experiment.into(), &cfg, &out) {
                Ok(files) => {
                    for f in files {
                        println!("{}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Validate { config } => match validate_config(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprint!("{e}");
                ExitCode::FAILURE
            }
        },
        Command::Defaults => {
            print!("{}", RunConfig::default().to_toml());
            ExitCode::SUCCESS
        }
    }
}

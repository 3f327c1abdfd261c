//! ptmverify: exact-arithmetic checks for finite prepare-transform-measure
//! models and their ontic extensions.
//!
//! Exit codes: 0 success, 1 a `--require`d condition or demo assertion
//! failed, 2 input error, 3 the command needs a no-signalling model,
//! 4 unsupported model shape.

mod commands;
mod modelfile;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{BellSettings, Outcome};

/// A command failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    pub fn signalling(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 3,
        }
    }

    pub fn shape(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(
    name = "ptmverify",
    version,
    about = "Exact verification of prepare-transform-measure models: causal conditions, \
             no-signalling, time reverses, Bell-type inequalities and the derivation audit"
)]
struct Cli {
    /// Output format; overrides the PTMVERIFY_FORMAT environment variable.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file and evaluate the five conditions plus
    /// no-signalling.
    Check {
        file: PathBuf,
        /// Comma-separated condition names that must pass (exit 1 otherwise):
        /// free_choice, realism, lambda_mediation, no_retrocausality,
        /// time_symmetry.
        #[arg(long)]
        require: Option<String>,
    },
    /// Construct the time reverse of a model.
    Reverse {
        file: PathBuf,
        /// Build the ontological reverse (needs an ontic, no-signalling
        /// model); default is the operational reverse.
        #[arg(long)]
        ontological: bool,
        /// Write the reverse model file here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Audit the independence derivation chain on the model's canonical
    /// reverse pair.
    Audit { file: PathBuf },
    /// Evaluate a Bell-type inequality on the model's statistics.
    Bell {
        file: PathBuf,
        /// Which inequality to evaluate: wigner or chsh.
        #[arg(long)]
        inequality: String,
        /// Preparation settings (defaults: the first two declared).
        #[arg(long)]
        x0: Option<String>,
        #[arg(long)]
        x1: Option<String>,
        /// Measurement settings (defaults: the first two declared).
        #[arg(long)]
        y0: Option<String>,
        #[arg(long)]
        y1: Option<String>,
    },
    /// Sample runs from an ontic model and compare empirical disagreement
    /// rates against the exact values.
    Sample {
        file: PathBuf,
        /// Number of runs.
        #[arg(short = 'n', long = "runs")]
        runs: i64,
        /// Seed for the deterministic generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// "uniform" (default) or a path to a JSON settings distribution
        /// {"entries": [{"x": ..., "y": ..., "p": ...}]}.
        #[arg(long)]
        settings_dist: Option<String>,
    },
    /// Run the end-to-end demonstration on the built-in counterexample:
    /// conditions, reverses, inequalities and the derivation audit, from
    /// serialized fixture files.
    Demo,
    /// Write a built-in fixture as a model file: counterexample,
    /// counterexample-reverse, or singlet-stats.
    Export {
        fixture: String,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn resolve_format(flag: Option<Format>) -> Result<Format, CliError> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match std::env::var("PTMVERIFY_FORMAT") {
        Ok(value) => match value.as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            other => Err(CliError::input(format!(
                "PTMVERIFY_FORMAT must be \"text\" or \"json\", not {other:?}"
            ))),
        },
        Err(_) => Ok(Format::Text),
    }
}

fn run(cli: Cli) -> Result<(Outcome, Format), CliError> {
    let format = resolve_format(cli.format)?;
    let outcome = match &cli.command {
        Command::Check { file, require } => commands::cmd_check(file, require.as_deref())?,
        Command::Reverse {
            file,
            ontological,
            output,
        } => commands::cmd_reverse(file, *ontological, output.as_deref())?,
        Command::Audit { file } => commands::cmd_audit(file)?,
        Command::Bell {
            file,
            inequality,
            x0,
            x1,
            y0,
            y1,
        } => commands::cmd_bell(
            file,
            inequality,
            &BellSettings {
                x0: x0.clone(),
                x1: x1.clone(),
                y0: y0.clone(),
                y1: y1.clone(),
            },
        )?,
        Command::Sample {
            file,
            runs,
            seed,
            settings_dist,
        } => commands::cmd_sample(file, *runs, *seed, settings_dist.as_deref())?,
        Command::Demo => commands::cmd_demo()?,
        Command::Export { fixture, output } => commands::cmd_export(fixture, output.as_deref())?,
    };
    Ok((outcome, format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((outcome, format)) => {
            match format {
                Format::Text => print!("{}", outcome.text),
                Format::Json => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&outcome.json)
                            .expect("reports always serialize")
                    );
                }
            }
            ExitCode::from(u8::try_from(outcome.code).unwrap_or(1))
        }
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

//! `unmix` — train, separate, evaluate, inspect, ablate.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numeric
//! abort (non-finite loss), 3 data error. Data goes to files, progress
//! and diagnostics to stderr.

mod commands;
mod runconfig;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "unmix", version, about = "Time-domain music source separation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint plus a training-history CSV
    Train(TrainArgs),
    /// Separate a mixture wav into per-source wavs
    Separate(SeparateArgs),
    /// Score a trained checkpoint on the test split (SDR report)
    Evaluate(EvaluateArgs),
    /// Print the layer table, dilation schedule, and receptive field
    Inspect(InspectArgs),
    /// Train and evaluate the dilation/density comparison grid
    Ablate(AblateArgs),
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Dataset root containing train/ and validation/ splits
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// key = value run configuration
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output checkpoint path
    #[arg(long, value_name = "CKPT")]
    out: PathBuf,
    /// Resume from an existing checkpoint
    #[arg(long, value_name = "CKPT")]
    resume: Option<PathBuf>,
    /// Overrides the config-file seed
    #[arg(long)]
    seed: Option<u64>,
    /// Training-history CSV (default: <out>.history.csv)
    #[arg(long, value_name = "FILE")]
    history: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SeparateArgs {
    #[arg(long, value_name = "CKPT")]
    ckpt: PathBuf,
    /// Mixture wav (PCM16 or float32)
    #[arg(long, value_name = "MIX.wav")]
    input: PathBuf,
    /// Directory for the per-source wavs
    #[arg(long, value_name = "DIR")]
    outdir: PathBuf,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "CKPT")]
    ckpt: PathBuf,
    /// Dataset root containing a test/ split
    #[arg(long, value_name = "DIR")]
    data: PathBuf,
    /// Report CSV path (the aligned table goes to stdout)
    #[arg(long, value_name = "OUT.csv")]
    report: PathBuf,
}

#[derive(clap::Args)]
struct InspectArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AblateArgs {
    /// Dataset root (ignored with --toy, which synthesizes its own)
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,
    /// Output directory for the comparison CSV (and toy data)
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Desk-scale preset: small models on a synthetic two-tone dataset
    #[arg(long)]
    toy: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(train) = cause.downcast_ref::<unmix_core::train::TrainError>() {
            if matches!(train, unmix_core::train::TrainError::NonFiniteLoss { .. }) {
                return 2;
            }
        }
        if cause.downcast_ref::<runconfig::ConfigFileError>().is_some()
            || cause.downcast_ref::<unmix_core::config::ConfigError>().is_some()
        {
            return 1;
        }
    }
    3
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::Separate(args) => commands::separate::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Inspect(args) => commands::inspect::run(args),
        Command::Ablate(args) => commands::ablate::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

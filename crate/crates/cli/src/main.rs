use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use shipperf::ErrorKind;
use shipperf_cli::commands::{dispatch, Run};
use shipperf_cli::config::{parse_models, Loaded, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Generate a synthetic voyage dataset with known fouling truth
    Synth,
    /// Filter, merge hindcast, fit admiralty trends, build features and split
    Preprocess,
    /// Fit the enabled models and write the metrics table
    Calibrate,
    /// Predict calm-water trends along the fouling history
    Trend,
    /// Per-event power changes with curves and plots
    Report,
    /// Calm-water speed-power curves at one instant
    Curve,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Preprocess => "preprocess",
            Command::Calibrate => "calibrate",
            Command::Trend => "trend",
            Command::Report => "report",
            Command::Curve => "curve",
        }
    }
}

/// Ship hull and propeller performance monitoring from in-service data.
#[derive(Debug, Parser)]
#[command(name = "shipperf", version)]
struct Cli {
    command: Command,
    /// TOML run configuration; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory, overriding `paths.out`
    #[arg(long)]
    out: Option<PathBuf>,
    /// seed for every random choice, overriding `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// comma-separated subset of pcr,plsr,ann
    #[arg(long)]
    models: Option<String>,
}

fn exit_code(kind: ErrorKind) -> ExitCode {
    match kind {
        ErrorKind::Config => ExitCode::from(2),
        ErrorKind::Data => ExitCode::from(3),
        ErrorKind::Model => ExitCode::from(4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let models = match cli.models.as_deref().map(parse_models).transpose() {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: config: {e}");
            return exit_code(e.kind());
        }
    };
    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        models,
    };
    let loaded = match &cli.config {
        Some(path) => Loaded::from_file(path, &overrides),
        None => Loaded::from_str("", PathBuf::new(), &overrides),
    };
    let loaded = match loaded {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: config: {e}");
            return exit_code(e.kind());
        }
    };
    let run = Run::new(loaded);
    match dispatch(cli.command.name(), &run) {
        Ok(out) => {
            for note in &out.notes {
                eprintln!("note: {note}");
            }
            println!("{}: wrote {} files to {}", cli.command.name(), out.files.len(), out.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.error.kind())
        }
    }
}

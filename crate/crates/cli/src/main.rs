//! `wavehar`: accelerometer windows to wavelet scalograms to a CNN.
//!
//! Exit codes: 0 success, 1 input or configuration error, 2 numerical
//! failure (training divergence).

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Command;
use wavehar_harness::HarnessError;
use wavehar_nn::NnError;

use config::{RunConfig, Settings};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: String) -> Self {
        Self { code: 1, message }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        Self {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        HarnessError::from(e).into()
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::input(e.to_string())
            }
        })*
    };
}

input_error!(
    wavehar_core::signal_io::SignalError,
    wavehar_core::image::ImageError,
    wavehar_core::transform::TransformError
);

const SUBCOMMANDS: &[(&str, &str)] = &[
    ("ingest-check", "Validate a signals file and print a summary"),
    ("transform", "Write one CWTS scalogram tensor per sample (plus optional PNGs)"),
    ("render", "Export the channels of one CWTS file as PNGs"),
    ("train", "Train a network and write checkpoint, history and metrics"),
    ("eval", "Evaluate a checkpoint on a dataset or tensor directory"),
    ("sweep", "Run an ablation sweep over one dimension"),
    ("demo-fourier", "Compare Fourier spectra and scalograms of three test signals"),
];

fn cli() -> Command {
    let mut cmd = Command::new("wavehar")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Wavelet scalogram images and a small CNN for accelerometer activity recognition")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(config::attach(Command::new(*name).about(*about)));
    }
    cmd
}

fn run() -> Result<(), CliError> {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(()),
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => Err(CliError::input(String::new())),
                _ => Err(CliError::input(String::new())),
            };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let rc = RunConfig::from_settings(&Settings::from_matches(sub)?)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(rc.jobs)
        .build_global()
        .map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    match name {
        "ingest-check" => commands::ingest_check(&rc),
        "transform" => commands::transform(&rc),
        "render" => commands::render(&rc),
        "train" => commands::train_cmd(&rc),
        "eval" => commands::eval_cmd(&rc),
        "sweep" => commands::sweep_cmd(&rc),
        "demo-fourier" => commands::demo_fourier(&rc),
        _ => unreachable!("unknown subcommand {name}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code)
        }
    }
}

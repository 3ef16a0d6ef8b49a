//! `sbneuro` command-line front end.
//!
//! Every command writes its results plus a `manifest.json` into `--out-dir`.
//! Exit status: 0 on success, 2 for input or configuration errors, 3 for
//! numerical failures.

mod commands;
mod context;

pub use context::{sha256_hex, InputDigest, RunManifest, Table, MANIFEST_FILE, MANIFEST_SCHEMA};

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Instant, SystemTime};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::extract::ExtractError;
use crate::io::CsvError;
use crate::neuron::NeuronError;
use crate::sbmodel::ModelError;
use crate::snn::SnnError;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonConvergence { .. } | ModelError::ThresholdOutOfRange { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<NeuronError> for CliError {
    fn from(e: NeuronError) -> Self {
        match e {
            NeuronError::NonFiniteState { .. } => CliError::Numerical(e.to_string()),
            NeuronError::Source(m) => m.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> Self {
        match e {
            ExtractError::DegenerateFit(_) => CliError::Numerical(e.to_string()),
            ExtractError::Model(m) => m.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<SnnError> for CliError {
    fn from(e: SnnError) -> Self {
        match e {
            SnnError::Neuron(n) => n.into(),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sbneuro",
    version,
    about = "Schottky-barrier MOSFET neuron toolkit"
)]
pub struct Cli {
    /// Directory receiving result files and manifest.json.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Table output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for every random draw of the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fixed integration step, s.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Device parameter JSON.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Command configuration JSON (neuron-v1 or snn-train-v1).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named experiment preset (fig4a … fig7e).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drain-current sweeps (IvCurve CSV).
    Sweep(SweepArgs),
    /// Calibrate device parameters against measured curves.
    Fit(FitArgs),
    /// Membrane traces and spike trains.
    Neuron(NeuronArgs),
    /// Firing frequency against gate voltage.
    Freq(FreqArgs),
    /// Train or evaluate the Iris classifier.
    Snn {
        #[command(subcommand)]
        action: SnnAction,
    },
    /// Split a result CSV into two-column plot files.
    Plotdata(PlotArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Transfer,
    Output,
    BackGate,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepKind::Transfer)]
    pub kind: SweepKind,
    /// First value of the swept voltage.
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub from: f64,
    /// Last value of the swept voltage (included when on the grid).
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    pub to: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub step: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub v_tg: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub v_bg: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub v_ds: f64,
    /// Relative Gaussian noise on each current (uses --seed).
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Measured IvCurve CSV files.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    /// Comma-separated free parameters; empty echoes the initial values.
    #[arg(long, default_value = "")]
    pub free: String,
}

#[derive(Debug, Args)]
pub struct NeuronArgs {
    /// Gate voltages, one trace each.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub v_tg: Vec<f64>,
    /// Simulated time per trace, s.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Keep every k-th step in the trace.
    #[arg(long)]
    pub decimation: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    /// Gate voltages to sweep.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub v_tg_list: Vec<f64>,
    /// Measured small/large capacitor frequency ratio; reports the implied
    /// parasitic capacitance.
    #[arg(long)]
    pub fit_parasitic: Option<f64>,
    #[arg(long, default_value_t = crate::neuron::C_SMALL)]
    pub c_small: f64,
    #[arg(long, default_value_t = crate::neuron::C_LARGE)]
    pub c_large: f64,
    /// Simulated-time limit per point, s.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum SnnAction {
    Train(SnnTrainArgs),
    Eval(SnnEvalArgs),
}

#[derive(Debug, Args)]
pub struct SnnTrainArgs {
    /// Iris CSV overriding the embedded copy.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SnnEvalArgs {
    /// snn-weights-v1 JSON.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Result CSV whose first column is the abscissa.
    #[arg(long)]
    pub input: PathBuf,
    /// Emit log10 of the ordinate; non-positive values are dropped.
    #[arg(long)]
    pub log_y: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Drops `--out-dir` and its value so the rest can be replayed elsewhere.
fn strip_out_dir(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out-dir" {
            skip = true;
            continue;
        }
        if a.starts_with("--out-dir=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Sweep(_) => "sweep",
        Command::Fit(_) => "fit",
        Command::Neuron(_) => "neuron",
        Command::Freq(_) => "freq",
        Command::Snn {
            action: SnnAction::Train(_),
        } => "snn train",
        Command::Snn {
            action: SnnAction::Eval(_),
        } => "snn eval",
        Command::Plotdata(_) => "plotdata",
        Command::Replay(_) => "replay",
    }
}

/// Runs one command. `args` excludes the program name. Returns the text to
/// print on stdout.
pub fn execute(args: &[String]) -> Result<String, CliError> {
    let argv = std::iter::once(OsString::from("sbneuro")).chain(args.iter().map(OsString::from));
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Input(e.to_string()))?;
    if let Command::Replay(r) = &cli.command {
        return commands::replay(&r.manifest, &cli.out_dir);
    }
    let started = SystemTime::now();
    let clock = Instant::now();
    let mut ctx = context::Context::new(cli.out_dir.clone(), cli.format);
    ctx.seed = cli.seed;
    commands::dispatch(&cli, &mut ctx)?;
    ctx.write_manifest(
        command_name(&cli.command),
        strip_out_dir(args),
        started,
        clock,
    )
}

/// Entry point of the binary: runs, prints, and maps errors to exit codes.
pub fn main_with_args(args: &[String]) -> i32 {
    // Help and version requests are not errors.
    let argv = std::iter::once(OsString::from("sbneuro")).chain(args.iter().map(OsString::from));
    if let Err(e) = Cli::try_parse_from(argv) {
        if !e.use_stderr() {
            print!("{e}");
            return 0;
        }
    }
    match execute(args) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            let msg = e.to_string();
            if msg.starts_with("error:") {
                eprint!("{msg}");
            } else {
                eprintln!("error: {msg}");
            }
            e.exit_code()
        }
    }
}

//! Command-line front end: generation, compression, feature extraction,
//! training, prediction, evaluation and a line-oriented stream processor.
//!
//! [`run`] takes its arguments and standard streams explicitly so the whole
//! tool can be driven in-process. Exit codes: 0 success, 1 usage error,
//! 2 data error.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyberstc::DeltaMode;

pub use config::{ConfigLayer, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<cyberstc::Error> for CliError {
    fn from(e: cyberstc::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Standard streams of one invocation.
pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

#[derive(Debug, Parser)]
#[command(
    name = "cyberstc",
    version,
    about = "Trajectory compression and discomfort prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic course and its discomfort reports.
    Gen(GenArgs),
    /// Compress a trajectory and report kept points and the rate.
    Compress(CompressArgs),
    /// Per-window compression rate and rate change.
    Features(FeaturesArgs),
    /// Train a per-user model on feature/report pairs.
    Train(TrainArgs),
    /// Predict a discomfort curve from a trajectory.
    Predict(PredictArgs),
    /// Compare reported and predicted curves, or direction labels.
    Eval(EvalArgs),
    /// Process `x,y,z,t` lines from stdin one window at a time.
    Stream(StreamArgs),
}

/// Settings shared by every command that extracts features or trains.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with default settings; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Compression threshold in Um.
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Window length in seconds.
    #[arg(long = "window", value_name = "SECONDS", allow_hyphen_values = true)]
    pub window_s: Option<f64>,
    #[arg(long, value_parser = parse_delta_mode)]
    pub delta_mode: Option<DeltaMode>,
}

fn parse_delta_mode(s: &str) -> Result<DeltaMode, String> {
    s.parse().map_err(|e: cyberstc::Error| e.to_string())
}

impl ConfigArgs {
    fn layers(&self) -> Result<(ConfigLayer, ConfigLayer), CliError> {
        let flags = ConfigLayer {
            epsilon: self.epsilon,
            window_s: self.window_s,
            delta_mode: self.delta_mode,
            ..Default::default()
        };
        let file = match &self.config {
            Some(path) => ConfigLayer::load(path)?,
            None => ConfigLayer::default(),
        };
        Ok((flags, file))
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let (flags, file) = self.layers()?;
        RunConfig::resolve(&[&flags, &file])
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Course description (JSON); unspecified fields take defaults.
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
    /// Synthetic sickness model (JSON); defaults when omitted.
    #[arg(long, value_name = "FILE")]
    pub sickness: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub trajectory: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub reports: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Stc,
    Dp,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Kept points as CSV; omitted means only the summary is printed.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "stc")]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Destination; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FeatureFormat,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeadArg {
    Regression,
    Classifier,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Features CSV; repeat once per session, paired in order with --reports.
    #[arg(long, value_name = "FILE", required = true)]
    pub features: Vec<PathBuf>,
    /// Discomfort CSV on the same window grid as the matching --features.
    #[arg(long, value_name = "FILE", required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Training summary as JSON.
    #[arg(long, value_name = "FILE")]
    pub metrics: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "regression")]
    pub head: HeadArg,
    /// Hidden layer width.
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Share of samples used for training; 1 holds nothing out.
    #[arg(long = "split", allow_hyphen_values = true)]
    pub split_fraction: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Score the predicted curve starts from.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub anchor: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Reported `t,score` CSV.
    #[arg(long, value_name = "FILE", requires = "predicted", conflicts_with_all = ["labels", "predictions"])]
    pub reported: Option<PathBuf>,
    /// Predicted curve CSV from `predict`.
    #[arg(long, value_name = "FILE", requires = "reported")]
    pub predicted: Option<PathBuf>,
    /// Actual directions, one `lower|same|higher` per line.
    #[arg(long, value_name = "FILE", requires = "predictions")]
    pub labels: Option<PathBuf>,
    /// Predicted directions, same format as --labels.
    #[arg(long, value_name = "FILE", requires = "labels")]
    pub predictions: Option<PathBuf>,
    /// Metrics JSON destination; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Regression model; adds predicted delta and score columns.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub anchor: f64,
    /// Trajectory id for 4-field input lines.
    #[arg(long, default_value = "stream")]
    pub tid: String,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(io.stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(io.stdout, "{e}");
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    match commands::dispatch(cli.command, io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Files produced by a command, written only once everything succeeded.
#[derive(Default)]
pub(crate) struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub(crate) fn add(&mut self, path: &Path, bytes: Vec<u8>) {
        self.files.push((path.to_path_buf(), bytes));
    }

    /// Writes each file through a sibling temporary and a rename so readers
    /// never observe a half-written file.
    pub(crate) fn commit(self) -> Result<(), CliError> {
        for (path, bytes) in self.files {
            let mut tmp = path.clone().into_os_string();
            tmp.push(format!(".tmp{}", std::process::id()));
            let tmp = PathBuf::from(tmp);
            std::fs::write(&tmp, &bytes)
                .and_then(|_| std::fs::rename(&tmp, &path))
                .map_err(|e| {
                    let _ = std::fs::remove_file(&tmp);
                    CliError::Data(format!("cannot write {}: {e}", path.display()))
                })?;
        }
        Ok(())
    }
}

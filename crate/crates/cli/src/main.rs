//! `hffeat`: detect transient high-frequency features in a sampled signal
//! and test their significance.

mod commands;
mod config;
mod error;
mod ingest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hffeat", version, about = "High-frequency feature detection and Monte Carlo testing")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic benchmark signal.
    Gen(GenArgs),
    /// l1 trend filtering.
    Trend(TrendArgs),
    /// Wavelet noise level estimate and VisuShrink denoising.
    Noise(NoiseArgs),
    /// Extract the (G, D) feature and the amplitude spectrum.
    Extract(ExtractArgs),
    /// Full test: feature, trend, noise level, null cloud, decision.
    Test(TestArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV with one value column, or time (seconds) and value columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Sampling interval in seconds, for single-column input.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Flat key = value file of flag defaults; flags on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetName {
    Sls31,
    Synth301,
}

#[derive(Debug, Clone, Args)]
pub struct LambdaArgs {
    /// Trend filter penalty.
    #[arg(long, conflicts_with = "lambda_preset")]
    pub lambda: Option<f64>,
    /// Named penalty: sls31 (light-scattering data) or synth301 (benchmark).
    #[arg(long, value_enum)]
    pub lambda_preset: Option<PresetName>,
}

#[derive(Debug, Clone, Args)]
pub struct SmoothingArgs {
    /// Largest smoothing width tried by the automatic selection.
    #[arg(long = "K", conflicts_with = "m")]
    pub k: Option<usize>,
    /// Fixed smoothing half-width, bypassing the selection.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct GenArgs {
    /// Number of samples; the time span stays at the reference 84 hours.
    #[arg(long, default_value_t = 1 << 14)]
    pub n: usize,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.025)]
    pub sigma: f64,
    /// Oscillation amplitude.
    #[arg(long, default_value_t = 0.05)]
    pub c_a: f64,
    /// Oscillation frequency in cycles per hour.
    #[arg(long, default_value_t = 10.0)]
    pub c_f: f64,
    /// Splice index of the affine ramp; scaled from the reference when absent.
    #[arg(long)]
    pub j_connect: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct TrendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub lambda: LambdaArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Coarsest wavelet level that is thresholded.
    #[arg(long, default_value_t = hffeat::noise::DEFAULT_J0)]
    pub j0_wavelet: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub lambda: LambdaArgs,
    #[command(flatten)]
    pub smoothing: SmoothingArgs,
    /// Number of null replicates.
    #[arg(long = "N", default_value_t = 200)]
    pub replicates: usize,
    /// Master seed of the null replicates.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Known trend (CSV column `trend`, or a one- or two-column file) in
    /// place of the l1 estimate.
    #[arg(long)]
    pub trend_file: Option<PathBuf>,
    /// Known noise level in place of the wavelet estimate.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("hffeat: error in stage {e}");
            return ExitCode::FAILURE;
        }
    };
    let cli = Cli::parse_from(argv);
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Trend(a) => commands::trend(&a),
        Command::Noise(a) => commands::noise(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Test(a) => commands::test(&a),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hffeat: error in stage {e}");
            ExitCode::FAILURE
        }
    }
}

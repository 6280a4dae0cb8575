//! Command-line front end: `sample`, `train`, `denoise` and `bench`.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use deepdenoise_core::NoiseKind;

use crate::arch::Architecture;
use crate::bench::DEFAULT_LEVELS;
use crate::error::{Error, Result};

pub use commands::{cmd_bench, cmd_denoise, cmd_sample, cmd_train};
pub use config::parse_config;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "DEEPDENOISE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "deepdenoise", version, about = "Blind patch-based image denoising")]
pub struct Cli {
    /// key=value file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for patch denoising and benchmark cells.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a random patch corpus from an image directory.
    Sample(SampleArgs),
    /// Train a model on a patch corpus.
    Train(TrainArgs),
    /// Denoise one image, optionally corrupting it first.
    Denoise(DenoiseArgs),
    /// Evaluate models over a noise grid on an image directory.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 2)]
    pub per_image: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// One of grbm, gdbm2, gdbm4, dae1, dae2, dae4.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 5)]
    pub hidden_factor: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides the recipe's minibatch size.
    #[arg(long)]
    pub minibatch: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    None,
    Gaussian,
    Saltpepper,
}

impl NoiseArg {
    pub fn kind(self) -> Option<NoiseKind> {
        match self {
            NoiseArg::None => None,
            NoiseArg::Gaussian => Some(NoiseKind::WhiteGaussian),
            NoiseArg::Saltpepper => Some(NoiseKind::SaltPepper),
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Corrupt the input before denoising; the model is not told.
    #[arg(long, value_enum, default_value_t = NoiseArg::None)]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 0.0)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the corrupted input here.
    #[arg(long)]
    pub noisy_out: Option<PathBuf>,
    /// Clean reference for PSNR; defaults to the input when it was corrupted.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Write the PSNR triple as a one-row report CSV.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct BenchArgs {
    /// Model files, comma separated or repeated.
    #[arg(long = "models", required = true, value_delimiter = ',')]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long, value_delimiter = ',', default_values = ["gaussian", "saltpepper"])]
    pub kinds: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS)]
    pub levels: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Thread count from the flag or environment, else the machine's parallelism.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.filter(|&n| n > 0)
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
}

/// Parses `args` (including the program name), merges any config file and
/// runs the command, writing human-readable output to `out`.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send)) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = config::merge_config(&Cli::command(), args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            write!(out, "{e}").map_err(|e| Error::io("<stdout>", e))?;
            return Ok(());
        }
        Err(e) => return Err(Error::Usage(e.render().to_string())),
    };
    let threads = resolve_threads(cli.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Sample(a) => cmd_sample(a, out),
        Command::Train(a) => {
            a.model.parse::<Architecture>()?;
            cmd_train(a, threads, out)
        }
        Command::Denoise(a) => cmd_denoise(a, out),
        Command::Bench(a) => cmd_bench(a, threads, out),
    })
}

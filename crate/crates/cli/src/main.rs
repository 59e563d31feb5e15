use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use auon_core::run::OUTPUT_DIR_ENV;
use auon_core::Execution;

mod bench;
mod output;
mod spectra;
mod train;
mod transform;
mod verify;

#[derive(Debug, Parser)]
#[command(name = "auon", version, about = "cosh-RMS orthogonalization transforms, checks and training runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply one transform to a literal or seeded random matrix.
    Transform(transform::TransformArgs),
    /// Run the seeded trust-region, tail and identity batteries.
    Verify(verify::VerifyArgs),
    /// Time the transforms on square Gaussian matrices.
    Bench(bench::BenchArgs),
    /// Trace singular values through Newton-Schulz iterations.
    Spectra(spectra::SpectraArgs),
    /// Train the blob classifier and record alignment diagnostics.
    Train(train::TrainArgs),
}

/// Output directory flag shared by subcommands that write files.
#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory for emitted files [default: $AUON_OUTPUT_DIR, else ./out]
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
}

impl OutputArgs {
    pub fn resolve(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(default_output_dir)
    }
}

pub fn default_output_dir() -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from("out"),
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum ExecArg {
    Sequential,
    #[default]
    Parallel,
}

impl From<ExecArg> for Execution {
    fn from(e: ExecArg) -> Self {
        match e {
            ExecArg::Sequential => Execution::Sequential,
            ExecArg::Parallel => Execution::Parallel,
        }
    }
}

/// Parses `RxC`.
pub fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("shape must look like RxC, got '{s}'"))?;
    let rows: usize = r.trim().parse().with_context(|| format!("bad row count in '{s}'"))?;
    let cols: usize = c.trim().parse().with_context(|| format!("bad column count in '{s}'"))?;
    if rows == 0 || cols == 0 {
        bail!("shape dimensions must be positive, got '{s}'");
    }
    Ok((rows, cols))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Transform(a) => transform::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Spectra(a) => spectra::run(&a),
        Command::Train(a) => train::run(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

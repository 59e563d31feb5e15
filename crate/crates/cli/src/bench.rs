use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;

use auon_core::diagnostics::transform_bench;

use crate::output::{announce, write_csv, BENCH_HEADER};
use crate::{ensure_dir, OutputArgs};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma-separated square sizes.
    #[arg(long, default_value = "64,128,256,512,1024")]
    pub sizes: String,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad size '{p}'")))
        .collect()
}

pub fn run(args: &BenchArgs) -> Result<ExitCode> {
    let sizes = parse_sizes(&args.sizes)?;
    let rows = transform_bench(&sizes, args.repeats)?;
    for r in &rows {
        println!("{:>5} {:<15} {:.6e} s (std {:.2e})", r.size, r.transform, r.mean_seconds, r.std_seconds);
    }
    let dir = args.out.resolve();
    ensure_dir(&dir)?;
    let path = dir.join("bench.csv");
    write_csv(
        &path,
        &BENCH_HEADER,
        rows.iter().map(|r| (r.size, r.transform, r.mean_seconds, r.std_seconds)),
    )?;
    announce(path);
    Ok(ExitCode::SUCCESS)
}

use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;

use auon_core::verify::{default_suite, spike_battery, spike_config, PropertyOutcome};

use crate::ExecArg;

/// Counterexamples printed per failing property.
const MAX_LISTED: usize = 5;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the tail-suppression battery for this spike magnitude instead of
    /// the default suite. Repeatable.
    #[arg(long)]
    pub spike: Vec<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub exec: ExecArg,
}

pub fn print_outcome(o: &PropertyOutcome) {
    let status = if o.passed() { "PASS" } else { "FAIL" };
    println!(
        "{status} {} samples={} violations={} worst_margin={:.6e} worst_value={:.6e}",
        o.name,
        o.samples,
        o.violations.len(),
        o.worst_margin,
        o.worst_value
    );
    for c in o.violations.iter().take(MAX_LISTED) {
        println!(
            "    counterexample seed={} shape={}x{} dist={} value={:.6e} bound={:.6e}",
            c.seed,
            c.rows,
            c.cols,
            c.distribution.name(),
            c.value,
            c.bound
        );
    }
    if o.violations.len() > MAX_LISTED {
        println!("    ... {} more", o.violations.len() - MAX_LISTED);
    }
}

pub fn run(args: &VerifyArgs) -> Result<ExitCode> {
    if let Some(a) = args.spike.iter().find(|a| !a.is_finite() || **a <= 0.0) {
        bail!("spike magnitude must be positive and finite, got {a}");
    }
    let start = Instant::now();
    let outcomes = if args.spike.is_empty() {
        default_suite(args.seed, args.exec.into())
    } else {
        spike_battery(&spike_config(args.seed, args.exec.into()), &args.spike)
    };
    for o in &outcomes {
        print_outcome(o);
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    println!(
        "{} of {} properties passed in {:.2}s",
        outcomes.len() - failed,
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

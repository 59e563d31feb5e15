use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;

use auon_core::diagnostics::{median, BootstrapCI, StepDiagnostics};
use auon_core::run::Emit;
use auon_core::{RunConfig, RunLog};

use crate::output::{announce, write_csv, write_json, DIAGNOSTICS_HEADER};
use crate::{default_output_dir, ensure_dir};

/// Flags mirror the config-file keys and override them.
#[derive(Debug, Args)]
pub struct TrainArgs {
    /// `key = value` settings file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// auon, hybrid, muon, sgdm or adamw. Resets hyperparameters to that
    /// optimizer's defaults before other flags apply.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub nesterov: Option<bool>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub ns_steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub spread: Option<f64>,
    /// Comma-separated subset of runlog,diagnostics.
    #[arg(long)]
    pub emit: Option<String>,
    /// Directory for emitted files [default: config file, then
    /// $AUON_OUTPUT_DIR, else ./out]
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
}

impl TrainArgs {
    fn settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push("optimizer", self.optimizer.clone());
        push("seed", self.seed.map(|v| v.to_string()));
        push("steps", self.steps.map(|v| v.to_string()));
        push("lr", self.lr.map(|v| v.to_string()));
        push("momentum", self.momentum.map(|v| v.to_string()));
        push("nesterov", self.nesterov.map(|v| v.to_string()));
        push("weight_decay", self.weight_decay.map(|v| v.to_string()));
        push("ns_steps", self.ns_steps.map(|v| v.to_string()));
        push("coeffs", self.coeffs.clone());
        push("hidden", self.hidden.map(|v| v.to_string()));
        push("n", self.n.map(|v| v.to_string()));
        push("d", self.d.map(|v| v.to_string()));
        push("classes", self.classes.map(|v| v.to_string()));
        push("spread", self.spread.map(|v| v.to_string()));
        push("emit", self.emit.clone());
        push("output_dir", self.output_dir.as_ref().map(|p| p.display().to_string()));
        out
    }

    pub fn build_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            output_dir: default_output_dir(),
            ..RunConfig::default()
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
            cfg.apply_text(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        for (k, v) in self.settings() {
            cfg.apply_setting(k, &v).with_context(|| format!("flag --{}", k.replace('_', "-")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Running `(step, loss, median rho, mean sigma2)` over steps `0..=step`.
fn running_rows(steps: &[StepDiagnostics]) -> Vec<(usize, f64, f64, f64)> {
    let mut rho = Vec::new();
    let mut sigma2_sum = 0.0;
    let mut sigma2_count = 0usize;
    steps
        .iter()
        .map(|s| {
            rho.extend(s.rho_samples().map(|(_, v)| v));
            for (_, v) in s.sigma2_samples() {
                sigma2_sum += v;
                sigma2_count += 1;
            }
            (s.step, s.loss, median(&rho), sigma2_sum / sigma2_count as f64)
        })
        .collect()
}

fn fmt_ci(ci: &BootstrapCI) -> String {
    format!(
        "{:.4} [{:.4}, {:.4}] ({:.0}% bootstrap, {} resamples)",
        ci.point,
        ci.lo,
        ci.hi,
        ci.level * 100.0,
        ci.iterations
    )
}

fn print_summary(log: &RunLog) {
    let s = &log.summary;
    let first = log.steps.first().map_or(f64::NAN, |s| s.loss);
    println!(
        "optimizer {} for {} steps: loss {:.6} -> {:.6}, accuracy {:.4}",
        log.config.optimizer.kind.name(),
        log.config.steps,
        first,
        log.final_loss,
        log.final_accuracy
    );
    println!("kappa median: {}", fmt_ci(&s.kappa_ci));
    println!("kappa p10: {:.4}", s.kappa_p10);
    println!("sigma2 mean: {}", fmt_ci(&s.sigma2_ci));
    for l in &s.layers {
        println!("  {:<15} rho median {:.4}  sigma2 mean {:.4}", l.name, l.rho_median, l.sigma2_mean);
    }
}

pub fn run(args: &TrainArgs) -> Result<ExitCode> {
    let cfg = args.build_config()?;
    let log = auon_core::nn::train(&cfg)?;
    print_summary(&log);

    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    if cfg.emit.contains(&Emit::RunLog) {
        let path = dir.join("runlog.json");
        write_json(&path, &log)?;
        announce(path);
    }
    if cfg.emit.contains(&Emit::Diagnostics) {
        let path = dir.join("diagnostics.csv");
        write_csv(&path, &DIAGNOSTICS_HEADER, running_rows(&log.steps))?;
        announce(path);
    }
    Ok(ExitCode::SUCCESS)
}

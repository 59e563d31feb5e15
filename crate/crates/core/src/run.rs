//! Training-run configuration and the resulting log.

use std::path::PathBuf;

use serde::Serialize;

use crate::diagnostics::{RunSummary, StepDiagnostics};
use crate::error::{invalid, Result};
use crate::optim::{OptimizerConfig, OptimizerKind};
use crate::transforms::{NsCoeffs, TransformKind};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "AUON_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetConfig {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub spread: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n: 512,
            d: 16,
            classes: 4,
            spread: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Emit {
    RunLog,
    Diagnostics,
    Spectra,
    Bench,
}

impl Emit {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "runlog" => Ok(Self::RunLog),
            "diagnostics" => Ok(Self::Diagnostics),
            "spectra" => Ok(Self::Spectra),
            "bench" => Ok(Self::Bench),
            other => Err(invalid(format!("unknown emit target '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    pub dataset: DatasetConfig,
    pub hidden: usize,
    pub steps: usize,
    pub output_dir: PathBuf,
    pub emit: Vec<Emit>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            optimizer: OptimizerConfig::for_kind(OptimizerKind::AuON),
            dataset: DatasetConfig::default(),
            hidden: 32,
            steps: 50,
            output_dir: PathBuf::from("out"),
            emit: vec![Emit::RunLog, Emit::Diagnostics],
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| invalid(format!("bad value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(invalid(format!("bad boolean '{value}' for '{key}'"))),
    }
}

pub fn parse_optimizer_kind(s: &str) -> Result<OptimizerKind> {
    match s.trim() {
        "auon" => Ok(OptimizerKind::AuON),
        "hybrid" => Ok(OptimizerKind::HybridAuON),
        "muon" => Ok(OptimizerKind::MuonNS),
        "sgdm" => Ok(OptimizerKind::SgdMomentum),
        "adamw" => Ok(OptimizerKind::AdamW),
        other => Err(invalid(format!("unknown optimizer '{other}'"))),
    }
}

/// Parses `a,b,c`.
pub fn parse_coeffs(s: &str) -> Result<NsCoeffs> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| parse_num("coeffs", p))
        .collect::<Result<_>>()?;
    match parts[..] {
        [a, b, c] => Ok(NsCoeffs::new(a, b, c)),
        _ => Err(invalid(format!("coefficients need three values a,b,c, got '{s}'"))),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(invalid("steps must be at least 1"));
        }
        if self.hidden == 0 {
            return Err(invalid("hidden size must be at least 1"));
        }
        self.optimizer.validate()
    }

    /// Applies one `key=value` setting. Changing `optimizer` resets the
    /// optimizer hyperparameters to that kind's defaults, so it should come
    /// before any per-hyperparameter keys.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<()> {
        let opt = &mut self.optimizer;
        match key.trim() {
            "seed" => self.seed = parse_num(key, value)?,
            "steps" => self.steps = parse_num(key, value)?,
            "hidden" => self.hidden = parse_num(key, value)?,
            "n" => self.dataset.n = parse_num(key, value)?,
            "d" => self.dataset.d = parse_num(key, value)?,
            "classes" => self.dataset.classes = parse_num(key, value)?,
            "spread" => self.dataset.spread = parse_num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "emit" => {
                self.emit = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(Emit::parse)
                    .collect::<Result<_>>()?;
                self.emit.sort();
                self.emit.dedup();
            }
            "optimizer" => *opt = OptimizerConfig::for_kind(parse_optimizer_kind(value)?),
            "lr" => opt.lr = parse_num(key, value)?,
            "momentum" => opt.momentum_beta = parse_num(key, value)?,
            "nesterov" => opt.nesterov = parse_bool(key, value)?,
            "weight_decay" => opt.weight_decay = parse_num(key, value)?,
            "adam_beta1" => opt.adam_beta1 = parse_num(key, value)?,
            "adam_beta2" => opt.adam_beta2 = parse_num(key, value)?,
            "adam_eps" => opt.adam_eps = parse_num(key, value)?,
            "ns_steps" => {
                let n: usize = parse_num(key, value)?;
                match &mut opt.transform {
                    TransformKind::NewtonSchulz { steps, .. } | TransformKind::HybridCoshRms { steps, .. } => *steps = n,
                    _ => return Err(invalid(format!("ns_steps does not apply to {}", opt.kind.name()))),
                }
            }
            "coeffs" => {
                let c = parse_coeffs(value)?;
                match &mut opt.transform {
                    TransformKind::NewtonSchulz { coeffs, .. } | TransformKind::HybridCoshRms { coeffs, .. } => *coeffs = c,
                    _ => return Err(invalid(format!("coeffs do not apply to {}", opt.kind.name()))),
                }
            }
            other => return Err(invalid(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` document; blank lines and `#` comments are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key=value, got '{raw}'", lineno + 1)))?;
            self.apply_setting(k, v)
                .map_err(|e| invalid(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub config: RunConfig,
    pub steps: Vec<StepDiagnostics>,
    /// Loss after the last update.
    pub final_loss: f64,
    pub final_accuracy: f64,
    pub summary: RunSummary,
}

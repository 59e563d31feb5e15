//! Per-parameter optimizer state machines.
//!
//! The structured optimizers (cosh-RMS, hybrid, Muon-style Newton–Schulz)
//! share one loop: blend momentum, transform the blended gradient, then take
//! a decoupled-weight-decay step scaled by [`shape_scale`]. SGD-momentum and
//! AdamW are the unstructured baselines.
//!
//! Momentum everywhere is the EMA form `buf ← β·buf + (1−β)·g`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::matrix::DenseMatrix;
use crate::transforms::{shape_scale, TransformKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OptimizerKind {
    AuON,
    HybridAuON,
    MuonNS,
    SgdMomentum,
    AdamW,
}

impl OptimizerKind {
    pub fn is_structured(self) -> bool {
        matches!(self, Self::AuON | Self::HybridAuON | Self::MuonNS)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AuON => "auon",
            Self::HybridAuON => "hybrid",
            Self::MuonNS => "muon",
            Self::SgdMomentum => "sgdm",
            Self::AdamW => "adamw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub momentum_beta: f64,
    pub nesterov: bool,
    pub weight_decay: f64,
    /// Transform used by the structured kinds; ignored by the baselines.
    pub transform: TransformKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl OptimizerConfig {
    /// Default hyperparameters for `kind`.
    pub fn for_kind(kind: OptimizerKind) -> Self {
        let base = Self {
            kind,
            lr: 0.24,
            momentum_beta: 0.95,
            nesterov: true,
            weight_decay: 0.0,
            transform: TransformKind::CoshRms,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        };
        match kind {
            OptimizerKind::AuON => base,
            OptimizerKind::HybridAuON => Self {
                transform: TransformKind::hybrid(),
                ..base
            },
            OptimizerKind::MuonNS => Self {
                lr: 0.01,
                transform: TransformKind::muon(),
                ..base
            },
            OptimizerKind::SgdMomentum => Self {
                lr: 0.1,
                momentum_beta: 0.9,
                nesterov: false,
                transform: TransformKind::Identity,
                ..base
            },
            OptimizerKind::AdamW => Self {
                lr: 0.003,
                transform: TransformKind::Identity,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(invalid(format!("learning rate must be finite and >= 0, got {}", self.lr)));
        }
        for (name, b) in [
            ("momentum_beta", self.momentum_beta),
            ("adam_beta1", self.adam_beta1),
            ("adam_beta2", self.adam_beta2),
        ] {
            if !(0.0..1.0).contains(&b) {
                return Err(invalid(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(invalid(format!("weight_decay must be >= 0, got {}", self.weight_decay)));
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(invalid(format!("adam_eps must be > 0, got {}", self.adam_eps)));
        }
        self.transform.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamState {
    pub value: DenseMatrix,
    pub momentum_buffer: DenseMatrix,
    pub adam_m: DenseMatrix,
    pub adam_v: DenseMatrix,
    pub step_count: u64,
}

/// The direction actually applied by a step, before the learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedUpdate {
    pub direction: DenseMatrix,
    /// cosh-RMS statistic of the transform, 0 if none was computed.
    pub rms_statistic: f64,
}

impl ParamState {
    pub fn new(value: DenseMatrix) -> Self {
        let (r, c) = value.shape();
        Self {
            value,
            momentum_buffer: DenseMatrix::zeros(r, c),
            adam_m: DenseMatrix::zeros(r, c),
            adam_v: DenseMatrix::zeros(r, c),
            step_count: 0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    /// Dispatches on `cfg.kind`.
    pub fn step(&mut self, grad: &DenseMatrix, cfg: &OptimizerConfig) -> Result<AppliedUpdate> {
        match cfg.kind {
            OptimizerKind::SgdMomentum => step_sgdm(self, grad, cfg),
            OptimizerKind::AdamW => step_adamw(self, grad, cfg),
            _ => step_structured(self, grad, cfg),
        }
    }
}

/// Matrix view of a parameter with shape `dims`: vectors become `1 x n`,
/// higher-rank tensors `(dims[0], product of the rest)`.
pub fn matrix_shape(dims: &[usize]) -> Result<(usize, usize)> {
    match dims {
        [] => Err(invalid("parameter has no dimensions")),
        _ if dims.contains(&0) => Err(invalid(format!("parameter has an empty dimension: {dims:?}"))),
        [n] => Ok((1, *n)),
        [first, rest @ ..] => Ok((*first, rest.iter().product())),
    }
}

/// Returns `(new_buf, effective_grad)`:
/// `new_buf = β·buf + (1−β)·g`, and the effective gradient is
/// `(1−β)·g + β·new_buf` under Nesterov, `new_buf` otherwise.
pub fn momentum_blend(
    buf: &DenseMatrix,
    g: &DenseMatrix,
    beta: f64,
    nesterov: bool,
) -> Result<(DenseMatrix, DenseMatrix)> {
    buf.ensure_same_shape(g)?;
    if !(0.0..1.0).contains(&beta) {
        return Err(invalid(format!("momentum beta must lie in [0, 1), got {beta}")));
    }
    let keep = 1.0 - beta;
    let new_buf = buf.zip_map(g, |b, x| beta * b + keep * x);
    let effective = if nesterov {
        g.zip_map(&new_buf, |x, b| keep * x + beta * b)
    } else {
        new_buf.clone()
    };
    Ok((new_buf, effective))
}

/// `value ← decay·value − step·direction`.
fn apply_step(value: &mut DenseMatrix, direction: &DenseMatrix, step: f64, decay: f64) {
    for (w, d) in value.as_mut_slice().iter_mut().zip(direction.as_slice()) {
        *w = *w * decay - step * d;
    }
}

pub fn step_structured(
    p: &mut ParamState,
    grad: &DenseMatrix,
    cfg: &OptimizerConfig,
) -> Result<AppliedUpdate> {
    if !cfg.kind.is_structured() {
        return Err(invalid(format!("{} is not a structured optimizer", cfg.kind.name())));
    }
    p.value.ensure_same_shape(grad)?;
    let (buf, effective) = momentum_blend(&p.momentum_buffer, grad, cfg.momentum_beta, cfg.nesterov)?;
    let (direction, rms_statistic) = cfg.transform.apply(&effective)?;
    let (rows, cols) = p.shape();
    p.momentum_buffer = buf;
    apply_step(
        &mut p.value,
        &direction,
        cfg.lr * shape_scale(rows, cols),
        1.0 - cfg.lr * cfg.weight_decay,
    );
    p.step_count += 1;
    Ok(AppliedUpdate {
        direction,
        rms_statistic,
    })
}

pub fn step_sgdm(p: &mut ParamState, grad: &DenseMatrix, cfg: &OptimizerConfig) -> Result<AppliedUpdate> {
    p.value.ensure_same_shape(grad)?;
    let (buf, direction) = momentum_blend(&p.momentum_buffer, grad, cfg.momentum_beta, cfg.nesterov)?;
    p.momentum_buffer = buf;
    apply_step(&mut p.value, &direction, cfg.lr, 1.0 - cfg.lr * cfg.weight_decay);
    p.step_count += 1;
    Ok(AppliedUpdate {
        direction,
        rms_statistic: 0.0,
    })
}

/// Bias-corrected Adam moments with decoupled weight decay.
pub fn step_adamw(p: &mut ParamState, grad: &DenseMatrix, cfg: &OptimizerConfig) -> Result<AppliedUpdate> {
    p.value.ensure_same_shape(grad)?;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    p.adam_m = p.adam_m.zip_map(grad, |m, g| b1 * m + (1.0 - b1) * g);
    p.adam_v = p.adam_v.zip_map(grad, |v, g| b2 * v + (1.0 - b2) * g * g);
    p.step_count += 1;
    let t = p.step_count as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let eps = cfg.adam_eps;
    let direction = p.adam_m.zip_map(&p.adam_v, |m, v| (m / c1) / ((v / c2).sqrt() + eps));
    apply_step(&mut p.value, &direction, cfg.lr, 1.0 - cfg.lr * cfg.weight_decay);
    Ok(AppliedUpdate {
        direction,
        rms_statistic: 0.0,
    })
}

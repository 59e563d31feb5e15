//! Two-layer tanh MLP with hand-written backprop, synthetic Gaussian-blob
//! data, and the training loop that records alignment diagnostics.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::diagnostics::{alignment_sample, summarize, LayerDiagnostics, StepDiagnostics, ALIGNMENT_EPS};
use crate::error::{invalid, Error, Result};
use crate::linalg::spectral_norm_estimate;
use crate::matrix::DenseMatrix;
use crate::optim::ParamState;
use crate::rng::{derive_seed, seeded};
use crate::run::{RunConfig, RunLog};

/// Parameter names in storage order.
pub const LAYER_NAMES: [&str; 4] = ["linear1.weight", "linear1.bias", "linear2.weight", "linear2.bias"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    /// `n x d`
    pub inputs: DenseMatrix,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(inputs: DenseMatrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if labels.len() != inputs.rows() {
            return Err(invalid(format!(
                "{} labels for {} input rows",
                labels.len(),
                inputs.rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(invalid(format!("label {bad} out of range for {classes} classes")));
        }
        Ok(Self { inputs, labels, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut data = Vec::with_capacity(rows.len() * d);
        for &r in rows {
            data.extend_from_slice(self.inputs.row(r));
        }
        let inputs = DenseMatrix::new(rows.len(), d, data)?;
        Self::new(inputs, rows.iter().map(|&r| self.labels[r]).collect(), self.classes)
    }
}

/// Standard deviation of the class-center coordinates. At the default
/// `spread = 1` the clusters overlap, so the Bayes error is nonzero.
pub const BLOB_CENTER_SCALE: f64 = 0.25;

/// Gaussian clusters around seeded class centers. Labels cycle through the
/// classes so counts are balanced within one.
pub fn make_blobs(seed: u64, n: usize, classes: usize, d: usize, spread: f64) -> Result<Dataset> {
    if classes < 2 || n < classes {
        return Err(invalid(format!("make_blobs needs n >= classes >= 2, got n={n}, classes={classes}")));
    }
    if d == 0 || spread.is_nan() || spread < 0.0 {
        return Err(invalid(format!("make_blobs needs d >= 1 and spread >= 0, got d={d}, spread={spread}")));
    }
    let mut rng = seeded(seed);
    let centers = DenseMatrix::random_gaussian(classes, d, &mut rng).scale(BLOB_CENTER_SCALE);
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    labels.shuffle(&mut rng);
    let inputs = DenseMatrix::from_fn(n, d, |i, j| {
        let noise: f64 = rng.sample(StandardNormal);
        centers[(labels[i], j)] + spread * noise
    });
    Dataset::new(inputs, labels, classes)
}

static NEXT_MODEL_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CacheTag {
    model: u64,
    generation: u64,
}

/// `logits = tanh(x W1ᵀ + b1) W2ᵀ + b2`.
#[derive(Debug, PartialEq)]
pub struct MlpModel {
    params: [DenseMatrix; 4],
    id: u64,
    generation: u64,
}

impl Clone for MlpModel {
    fn clone(&self) -> Self {
        Self {
            params: self.params.clone(),
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            generation: 0,
        }
    }
}

/// Activations kept from a forward pass for [`MlpModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    tag: CacheTag,
    inputs: DenseMatrix,
    labels: Vec<usize>,
    hidden: DenseMatrix,
    probs: DenseMatrix,
}

/// Gradients in [`LAYER_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub [DenseMatrix; 4]);

impl Gradients {
    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(DenseMatrix::frobenius_norm_sq).sum::<f64>().sqrt()
    }
}

impl MlpModel {
    /// Weights drawn `N(0, 1/fan_in)`, biases zero.
    pub fn new(seed: u64, input: usize, hidden: usize, classes: usize) -> Self {
        let mut rng = seeded(seed);
        let w1 = DenseMatrix::random_gaussian(hidden, input, &mut rng).scale(1.0 / (input as f64).sqrt());
        let w2 = DenseMatrix::random_gaussian(classes, hidden, &mut rng).scale(1.0 / (hidden as f64).sqrt());
        Self::from_params([w1, DenseMatrix::zeros(1, hidden), w2, DenseMatrix::zeros(1, classes)])
            .expect("shapes are consistent by construction")
    }

    pub fn from_params(params: [DenseMatrix; 4]) -> Result<Self> {
        let [w1, b1, w2, b2] = &params;
        let hidden = w1.rows();
        if b1.shape() != (1, hidden) || w2.cols() != hidden || b2.shape() != (1, w2.rows()) {
            return Err(invalid(format!(
                "inconsistent MLP shapes: w1 {:?}, b1 {:?}, w2 {:?}, b2 {:?}",
                w1.shape(),
                b1.shape(),
                w2.shape(),
                b2.shape()
            )));
        }
        Ok(Self {
            params,
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            generation: 0,
        })
    }

    pub fn params(&self) -> &[DenseMatrix; 4] {
        &self.params
    }

    /// Mutable access to one parameter; invalidates outstanding caches.
    pub fn param_mut(&mut self, index: usize) -> &mut DenseMatrix {
        self.generation += 1;
        &mut self.params[index]
    }

    pub fn input_dim(&self) -> usize {
        self.params[0].cols()
    }

    pub fn classes(&self) -> usize {
        self.params[2].rows()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(DenseMatrix::is_finite)
    }

    fn tag(&self) -> CacheTag {
        CacheTag {
            model: self.id,
            generation: self.generation,
        }
    }

    pub fn logits(&self, inputs: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
        let [w1, b1, w2, b2] = &self.params;
        let hidden = add_row(&inputs.matmul(&w1.transpose()), b1).map(f64::tanh);
        let logits = add_row(&hidden.matmul(&w2.transpose()), b2);
        (hidden, logits)
    }

    /// Mean softmax cross-entropy over the batch.
    pub fn forward_loss(&self, batch: &Dataset) -> Result<(f64, ForwardCache)> {
        if batch.dim() != self.input_dim() || batch.classes != self.classes() {
            return Err(invalid(format!(
                "batch (d={}, classes={}) does not match model (d={}, classes={})",
                batch.dim(),
                batch.classes,
                self.input_dim(),
                self.classes()
            )));
        }
        let (hidden, logits) = self.logits(&batch.inputs);
        let n = batch.len();
        let mut probs = DenseMatrix::zeros(n, self.classes());
        let mut loss = 0.0;
        for (i, &y) in batch.labels.iter().enumerate() {
            let row = logits.row(i);
            let peak = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|z| (z - peak).exp()).sum();
            let lse = peak + sum.ln();
            loss += lse - row[y];
            for (k, z) in row.iter().enumerate() {
                probs[(i, k)] = (z - lse).exp();
            }
        }
        let cache = ForwardCache {
            tag: self.tag(),
            inputs: batch.inputs.clone(),
            labels: batch.labels.clone(),
            hidden,
            probs,
        };
        Ok((loss / n as f64, cache))
    }

    pub fn backward(&self, cache: &ForwardCache) -> Result<Gradients> {
        if cache.tag != self.tag() {
            return Err(Error::StaleCache);
        }
        let n = cache.labels.len() as f64;
        let mut dlogits = cache.probs.clone();
        for (i, &y) in cache.labels.iter().enumerate() {
            dlogits[(i, y)] -= 1.0;
        }
        dlogits.scale_mut(1.0 / n);
        let w2 = &self.params[2];
        let gw2 = dlogits.transpose().matmul(&cache.hidden);
        let gb2 = dlogits.column_sums();
        let dz1 = dlogits.matmul(w2).zip_map(&cache.hidden, |d, h| d * (1.0 - h * h));
        let gw1 = dz1.transpose().matmul(&cache.inputs);
        let gb1 = dz1.column_sums();
        Ok(Gradients([gw1, gb1, gw2, gb2]))
    }

    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let (_, logits) = self.logits(&data.inputs);
        let correct = data
            .labels
            .iter()
            .enumerate()
            .filter(|&(i, &y)| {
                let row = logits.row(i);
                let best = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
                best == y
            })
            .count();
        correct as f64 / data.len() as f64
    }
}

fn add_row(m: &DenseMatrix, row: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    let cols = m.cols();
    for chunk in out.as_mut_slice().chunks_mut(cols) {
        for (x, b) in chunk.iter_mut().zip(row.as_slice()) {
            *x += b;
        }
    }
    out
}

/// Free-function form of [`MlpModel::forward_loss`].
pub fn forward_loss(model: &MlpModel, batch: &Dataset) -> Result<(f64, ForwardCache)> {
    model.forward_loss(batch)
}

/// Free-function form of [`MlpModel::backward`].
pub fn backward(model: &MlpModel, cache: &ForwardCache) -> Result<Gradients> {
    model.backward(cache)
}

/// Full-batch training run recording per-layer alignment, update energy,
/// spectral norm and cosh-RMS statistic at every step.
pub fn train(run: &RunConfig) -> Result<RunLog> {
    run.validate()?;
    let ds = &run.dataset;
    let data = make_blobs(derive_seed(run.seed, 0), ds.n, ds.classes, ds.d, ds.spread)?;
    let mut model = MlpModel::new(derive_seed(run.seed, 1), ds.d, run.hidden, ds.classes);
    let mut states: Vec<ParamState> = model.params().iter().cloned().map(ParamState::new).collect();

    let mut steps = Vec::with_capacity(run.steps);
    for step in 0..run.steps {
        let (loss, cache) = model.forward_loss(&data)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                step,
                loss,
                last_finite_step: step.checked_sub(1),
            });
        }
        let grads = model.backward(&cache)?;
        let mut layers = Vec::with_capacity(LAYER_NAMES.len());
        for (idx, (state, grad)) in states.iter_mut().zip(&grads.0).enumerate() {
            let applied = state.step(grad, &run.optimizer)?;
            let u = &applied.direction;
            layers.push(LayerDiagnostics {
                name: LAYER_NAMES[idx].to_string(),
                rho: alignment_sample(grad, u, ALIGNMENT_EPS)?,
                sigma2: u.frobenius_norm_sq(),
                update_spectral_norm: spectral_norm_estimate(u),
                rms_statistic: applied.rms_statistic,
            });
            *model.param_mut(idx) = state.value.clone();
        }
        steps.push(StepDiagnostics { step, loss, layers });
    }
    let (final_loss, _) = model.forward_loss(&data)?;
    if !final_loss.is_finite() {
        return Err(Error::Diverged {
            step: run.steps,
            loss: final_loss,
            last_finite_step: run.steps.checked_sub(1),
        });
    }
    let summary = summarize(&steps, run.seed)?;
    Ok(RunLog {
        config: run.clone(),
        steps,
        final_loss,
        final_accuracy: model.accuracy(&data),
        summary,
    })
}

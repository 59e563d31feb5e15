//! Update transforms applied to a (momentum-blended) gradient matrix.
//!
//! * cosh-RMS scaling: Frobenius-normalize, then divide by
//!   `r = sqrt(mean(cosh²(update)))`. A single positive rescale, so signs
//!   and component ratios survive while the spectral norm lands strictly
//!   below one.
//! * Newton–Schulz: the quintic iteration `X ← aX + (bA + cA²)X`,
//!   `A = XXᵀ`, run on the wide orientation of the matrix.
//! * Hybrid: a few Newton–Schulz steps followed by cosh-RMS scaling.
//! * Exact polar factor, for reference.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{polar_factor, spectral_norm_estimate};
use crate::matrix::DenseMatrix;

/// Added to `‖G‖_F` before normalizing.
pub const FROBENIUS_EPS: f64 = 1e-7;
/// Added to the cosh-RMS statistic before dividing.
pub const RMS_EPS: f64 = 1e-8;
/// Largest entry magnitude accepted by [`cosh_rms`]; `cosh` overflows
/// shortly past 710.
pub const COSH_ENTRY_LIMIT: f64 = 700.0;

/// Quintic Newton–Schulz coefficients `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NsCoeffs {
    /// Muon's tuned coefficients.
    pub const MUON: Self = Self::new(3.4445, -4.7750, 2.0315);
    /// Hybrid defaults.
    pub const HYBRID: Self = Self::new(1.0, -0.5, 0.375);

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// Gain applied to a unit singular value by one step.
    pub fn sum(&self) -> f64 {
        self.a + self.b + self.c
    }

    /// The singular-value map `σ ↦ aσ + bσ³ + cσ⁵` of one step.
    pub fn apply_scalar(&self, s: f64) -> f64 {
        let s2 = s * s;
        s * (self.a + s2 * (self.b + self.c * s2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TransformKind {
    Identity,
    ExactPolar,
    NewtonSchulz { steps: usize, coeffs: NsCoeffs },
    CoshRms,
    HybridCoshRms { steps: usize, coeffs: NsCoeffs },
}

impl TransformKind {
    pub const fn muon() -> Self {
        Self::NewtonSchulz {
            steps: 5,
            coeffs: NsCoeffs::MUON,
        }
    }

    pub const fn hybrid() -> Self {
        Self::HybridCoshRms {
            steps: 1,
            coeffs: NsCoeffs::HYBRID,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::NewtonSchulz { steps: 0, .. } | Self::HybridCoshRms { steps: 0, .. } => {
                Err(invalid("Newton-Schulz step count must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::ExactPolar => "polar",
            Self::NewtonSchulz { .. } => "newton-schulz",
            Self::CoshRms => "cosh-rms",
            Self::HybridCoshRms { .. } => "hybrid",
        }
    }

    /// Applies the transform, returning the output and the cosh-RMS statistic
    /// (0 for transforms that do not compute one).
    pub fn apply(&self, g: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
        self.validate()?;
        match *self {
            Self::Identity => Ok((g.clone(), 0.0)),
            Self::ExactPolar => Ok((exact_orthogonalize(g)?, 0.0)),
            Self::NewtonSchulz { steps, coeffs } => Ok((newton_schulz(g, steps, coeffs)?, 0.0)),
            Self::CoshRms => Ok(auon(g, FROBENIUS_EPS, RMS_EPS)),
            Self::HybridCoshRms { steps, coeffs } => hybrid(g, steps, coeffs),
        }
    }

    pub fn apply_with_report(&self, g: &DenseMatrix) -> Result<(DenseMatrix, TransformReport)> {
        let (out, rms) = self.apply(g)?;
        let report = TransformReport::measure(g, &out, rms);
        Ok((out, report))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformReport {
    pub input_frobenius: f64,
    /// cosh-RMS statistic `r`; 0 when the transform does not use it.
    pub rms_statistic: f64,
    pub output_spectral_norm: f64,
    pub output_frobenius: f64,
}

impl TransformReport {
    pub fn measure(input: &DenseMatrix, output: &DenseMatrix, rms_statistic: f64) -> Self {
        Self {
            input_frobenius: input.frobenius_norm(),
            rms_statistic,
            output_spectral_norm: spectral_norm_estimate(output),
            output_frobenius: output.frobenius_norm(),
        }
    }
}

/// `g / (‖g‖_F + eps0)`. Zero maps to zero.
pub fn normalize_frobenius(g: &DenseMatrix, eps0: f64) -> DenseMatrix {
    g.scale(1.0 / (g.frobenius_norm() + eps0))
}

/// `sqrt(mean(cosh²(x)))` over all entries.
pub fn cosh_rms(x: &DenseMatrix) -> Result<f64> {
    let peak = x.max_abs();
    if peak > COSH_ENTRY_LIMIT {
        return Err(Error::CoshOverflow(peak));
    }
    Ok(cosh_rms_unchecked(x))
}

fn cosh_rms_unchecked(x: &DenseMatrix) -> f64 {
    let sum: f64 = x
        .as_slice()
        .iter()
        .map(|&v| {
            let c = v.cosh();
            c * c
        })
        .sum();
    (sum / x.len() as f64).sqrt()
}

/// `update / (r + eps)` with `r = cosh_rms(update)`, without normalizing
/// first. Returns the scaled matrix and `r`.
pub fn cosh_rms_scale(update: &DenseMatrix, eps: f64) -> Result<(DenseMatrix, f64)> {
    let r = cosh_rms(update)?;
    Ok((update.scale(1.0 / (r + eps)), r))
}

/// cosh-RMS update without diagnostics: `(U, r)`.
pub fn auon(g: &DenseMatrix, eps0: f64, eps: f64) -> (DenseMatrix, f64) {
    let update = normalize_frobenius(g, eps0);
    // normalized entries are bounded by 1, far inside the cosh limit
    let r = cosh_rms_unchecked(&update);
    let mut u = update;
    u.scale_mut(1.0 / (r + eps));
    (u, r)
}

pub fn auon_transform(g: &DenseMatrix, eps0: f64, eps: f64) -> (DenseMatrix, TransformReport) {
    let (u, r) = auon(g, eps0, eps);
    let report = TransformReport::measure(g, &u, r);
    (u, report)
}

/// Runs the quintic map `steps` times starting from `x0` as given (no
/// normalization). Tall inputs are iterated in transposed form and
/// transposed back.
pub fn newton_schulz_iterate(x0: &DenseMatrix, steps: usize, coeffs: NsCoeffs) -> DenseMatrix {
    let tall = x0.rows() > x0.cols();
    let mut x = if tall { x0.transpose() } else { x0.clone() };
    for _ in 0..steps {
        x = newton_schulz_step(&x, coeffs);
    }
    if tall {
        x.transpose()
    } else {
        x
    }
}

/// One step on a wide (or square) iterate.
fn newton_schulz_step(x: &DenseMatrix, NsCoeffs { a, b, c }: NsCoeffs) -> DenseMatrix {
    let gram = x.gram_rows();
    let gram2 = gram.matmul(&gram);
    let poly = gram.zip_map(&gram2, |p, q| b * p + c * q);
    let bx = poly.matmul(x);
    x.zip_map(&bx, |xi, bi| a * xi + bi)
}

pub fn newton_schulz(g: &DenseMatrix, steps: usize, coeffs: NsCoeffs) -> Result<DenseMatrix> {
    if g.is_zero() {
        return Err(Error::ZeroMatrix("Newton-Schulz orthogonalization"));
    }
    if steps == 0 {
        return Err(invalid("Newton-Schulz step count must be at least 1"));
    }
    Ok(newton_schulz_iterate(
        &normalize_frobenius(g, FROBENIUS_EPS),
        steps,
        coeffs,
    ))
}

/// Newton–Schulz steps followed by cosh-RMS scaling: `(U, r)`.
/// `steps == 0` is plain cosh-RMS scaling.
pub fn hybrid(g: &DenseMatrix, steps: usize, coeffs: NsCoeffs) -> Result<(DenseMatrix, f64)> {
    if g.is_zero() {
        return Err(Error::ZeroMatrix("hybrid transform"));
    }
    if steps == 0 {
        return Ok(auon(g, FROBENIUS_EPS, RMS_EPS));
    }
    let x = newton_schulz(g, steps, coeffs)?;
    Ok(auon(&x, FROBENIUS_EPS, RMS_EPS))
}

pub fn hybrid_transform(
    g: &DenseMatrix,
    steps: usize,
    coeffs: NsCoeffs,
) -> Result<(DenseMatrix, TransformReport)> {
    let (u, r) = hybrid(g, steps, coeffs)?;
    let report = TransformReport::measure(g, &u, r);
    Ok((u, report))
}

pub fn exact_orthogonalize(g: &DenseMatrix) -> Result<DenseMatrix> {
    polar_factor(g)
}

/// `sqrt(max(1, rows / cols))`.
pub fn shape_scale(rows: usize, cols: usize) -> f64 {
    (rows as f64 / cols as f64).max(1.0).sqrt()
}

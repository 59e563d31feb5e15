//! Alignment/energy statistics for training runs, bootstrap intervals,
//! correlation-energy metrics, Newton–Schulz spectra and transform timing.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::{svd_jacobi, SVD_MAX_DIM};
use crate::matrix::DenseMatrix;
use crate::parallel::{map_indexed, Execution};
use crate::rng::seeded;
use crate::run::RunLog;
use crate::transforms::{
    auon, exact_orthogonalize, hybrid, newton_schulz, newton_schulz_iterate, normalize_frobenius, NsCoeffs,
    FROBENIUS_EPS, RMS_EPS,
};

/// `ε` in the alignment ratio denominator.
pub const ALIGNMENT_EPS: f64 = 1e-12;
pub const BOOTSTRAP_ITERATIONS: usize = 2000;
pub const BOOTSTRAP_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerDiagnostics {
    pub name: String,
    /// `⟨g, U⟩ / (‖g‖² + ε)`
    pub rho: f64,
    /// `‖U‖_F²`
    pub sigma2: f64,
    pub update_spectral_norm: f64,
    pub rms_statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    /// Loss before this step's update.
    pub loss: f64,
    pub layers: Vec<LayerDiagnostics>,
}

impl StepDiagnostics {
    pub fn rho_samples(&self) -> impl Iterator<Item = (&str, f64)> {
        self.layers.iter().map(|l| (l.name.as_str(), l.rho))
    }

    pub fn sigma2_samples(&self) -> impl Iterator<Item = (&str, f64)> {
        self.layers.iter().map(|l| (l.name.as_str(), l.sigma2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaSigma {
    pub kappa_median: f64,
    pub kappa_p10: f64,
    pub sigma2_mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapCI {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSummary {
    pub name: String,
    pub rho_median: f64,
    pub sigma2_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub kappa_median: f64,
    pub kappa_p10: f64,
    pub sigma2_mean: f64,
    pub kappa_ci: BootstrapCI,
    pub sigma2_ci: BootstrapCI,
    pub layers: Vec<LayerSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Statistic {
    Median,
    Mean,
}

impl Statistic {
    pub fn eval(self, samples: &[f64]) -> f64 {
        match self {
            Self::Median => median(samples),
            Self::Mean => mean(samples),
        }
    }
}

pub fn alignment_sample(g: &DenseMatrix, u: &DenseMatrix, eps: f64) -> Result<f64> {
    g.ensure_same_shape(u)?;
    Ok(g.dot(u) / (g.frobenius_norm_sq() + eps))
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Percentile `q ∈ [0, 100]` with linear interpolation between order
/// statistics at rank `q/100 · (n − 1)`. NaN for empty input.
pub fn percentile(samples: &[f64], q: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(samples: &[f64]) -> f64 {
    percentile(samples, 50.0)
}

/// κ̂ (median and 10th percentile of every ρ sample) and σ̂² (mean of every
/// ‖U‖² sample) over the given steps.
pub fn aggregate_steps(steps: &[StepDiagnostics]) -> Result<KappaSigma> {
    let rho: Vec<f64> = steps.iter().flat_map(|s| s.layers.iter().map(|l| l.rho)).collect();
    let sigma2: Vec<f64> = steps.iter().flat_map(|s| s.layers.iter().map(|l| l.sigma2)).collect();
    if rho.is_empty() {
        return Err(invalid("cannot aggregate an empty run log"));
    }
    Ok(KappaSigma {
        kappa_median: median(&rho),
        kappa_p10: percentile(&rho, 10.0),
        sigma2_mean: mean(&sigma2),
    })
}

pub fn aggregate_kappa_sigma(log: &RunLog) -> Result<KappaSigma> {
    aggregate_steps(&log.steps)
}

/// Percentile bootstrap with the default 2000 resamples at 95%.
pub fn bootstrap_ci(samples: &[f64], statistic: Statistic, seed: u64) -> Result<BootstrapCI> {
    bootstrap_ci_with(
        samples,
        statistic,
        seed,
        BOOTSTRAP_ITERATIONS,
        BOOTSTRAP_LEVEL,
        Execution::default(),
    )
}

/// Each resample draws from its own ChaCha stream, so the result does not
/// depend on `exec`. The interval is widened to contain the plug-in
/// statistic when the percentile interval alone would miss it.
pub fn bootstrap_ci_with(
    samples: &[f64],
    statistic: Statistic,
    seed: u64,
    iterations: usize,
    level: f64,
    exec: Execution,
) -> Result<BootstrapCI> {
    if samples.len() < 2 {
        return Err(invalid(format!("bootstrap needs at least 2 samples, got {}", samples.len())));
    }
    if iterations == 0 || !(0.0 < level && level < 1.0) {
        return Err(invalid(format!("bad bootstrap parameters: iterations={iterations}, level={level}")));
    }
    let n = samples.len();
    let mut stats = map_indexed(iterations, exec, |i| {
        let mut rng = seeded(seed);
        rng.set_stream(i as u64);
        let resample: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
        statistic.eval(&resample)
    });
    stats.sort_by(f64::total_cmp);
    let point = statistic.eval(samples);
    let tail = (1.0 - level) / 2.0 * 100.0;
    Ok(BootstrapCI {
        point,
        lo: percentile_sorted(&stats, tail).min(point),
        hi: percentile_sorted(&stats, 100.0 - tail).max(point),
        level,
        iterations,
    })
}

pub fn summarize(steps: &[StepDiagnostics], seed: u64) -> Result<RunSummary> {
    let overall = aggregate_steps(steps)?;
    let rho: Vec<f64> = steps.iter().flat_map(|s| s.layers.iter().map(|l| l.rho)).collect();
    let sigma2: Vec<f64> = steps.iter().flat_map(|s| s.layers.iter().map(|l| l.sigma2)).collect();
    let ci = |xs: &[f64], stat, s| {
        if xs.len() >= 2 {
            bootstrap_ci(xs, stat, s)
        } else {
            let p = Statistic::eval(stat, xs);
            Ok(BootstrapCI {
                point: p,
                lo: p,
                hi: p,
                level: BOOTSTRAP_LEVEL,
                iterations: 0,
            })
        }
    };
    let names: Vec<&str> = steps
        .first()
        .map(|s| s.layers.iter().map(|l| l.name.as_str()).collect())
        .unwrap_or_default();
    let layers = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let r: Vec<f64> = steps.iter().map(|s| s.layers[i].rho).collect();
            let e: Vec<f64> = steps.iter().map(|s| s.layers[i].sigma2).collect();
            LayerSummary {
                name: name.to_string(),
                rho_median: median(&r),
                sigma2_mean: mean(&e),
            }
        })
        .collect();
    Ok(RunSummary {
        kappa_median: overall.kappa_median,
        kappa_p10: overall.kappa_p10,
        sigma2_mean: overall.sigma2_mean,
        kappa_ci: ci(&rho, Statistic::Median, seed)?,
        sigma2_ci: ci(&sigma2, Statistic::Mean, seed.wrapping_add(1))?,
        layers,
    })
}

/// For `M = uᵀu`: `(trace(M), ‖M − (trace(M)/n)·I‖_F)`.
pub fn correlation_energy(u: &DenseMatrix) -> (f64, f64) {
    let m = u.gram_cols();
    let n = m.rows();
    let trace = m.trace();
    let mean_diag = trace / n as f64;
    let mut residual = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = m[(i, j)] - if i == j { mean_diag } else { 0.0 };
            residual += d * d;
        }
    }
    (trace, residual.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularTrajectory {
    /// Full spectrum after each step; index 0 is the normalized input.
    pub spectra: Vec<Vec<f64>>,
    /// `‖XXᵀ − I‖_F` per step, on the wide orientation of `X`.
    pub gram_distance: Vec<f64>,
}

pub fn singular_trajectory(g: &DenseMatrix, steps: usize, coeffs: NsCoeffs) -> Result<SingularTrajectory> {
    let k = g.rows().min(g.cols());
    if k > SVD_MAX_DIM {
        return Err(crate::error::Error::TooLarge { dim: k, cap: SVD_MAX_DIM });
    }
    if g.is_zero() {
        return Err(crate::error::Error::ZeroMatrix("singular trajectory"));
    }
    let mut x = normalize_frobenius(g, FROBENIUS_EPS);
    if x.rows() > x.cols() {
        x = x.transpose();
    }
    let eye = DenseMatrix::identity(k);
    let mut spectra = Vec::with_capacity(steps + 1);
    let mut gram_distance = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if step > 0 {
            x = newton_schulz_iterate(&x, 1, coeffs);
        }
        spectra.push(svd_jacobi(&x)?.sigma);
        gram_distance.push((&x.gram_rows() - &eye).frobenius_norm());
    }
    Ok(SingularTrajectory { spectra, gram_distance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BenchTransform {
    Auon,
    Hybrid1,
    NewtonSchulz5,
    ExactPolar,
}

impl BenchTransform {
    pub const ALL: [Self; 4] = [Self::Auon, Self::Hybrid1, Self::NewtonSchulz5, Self::ExactPolar];

    pub fn name(self) -> &'static str {
        match self {
            Self::Auon => "auon",
            Self::Hybrid1 => "hybrid1",
            Self::NewtonSchulz5 => "newton_schulz5",
            Self::ExactPolar => "exact_polar",
        }
    }

    fn run(self, g: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(match self {
            Self::Auon => auon(g, FROBENIUS_EPS, RMS_EPS).0,
            Self::Hybrid1 => hybrid(g, 1, NsCoeffs::HYBRID)?.0,
            Self::NewtonSchulz5 => newton_schulz(g, 5, NsCoeffs::MUON)?,
            Self::ExactPolar => exact_orthogonalize(g)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub transform: &'static str,
    pub mean_seconds: f64,
    pub std_seconds: f64,
}

pub const BENCH_SEED: u64 = 2024;
pub const BENCH_MIN_SIZE: usize = 16;

/// Times every transform on seeded `n x n` Gaussians. The exact polar
/// baseline is skipped above the SVD oracle cap.
pub fn transform_bench(sizes: &[usize], repeats: usize) -> Result<Vec<BenchRow>> {
    transform_bench_with(sizes, repeats, &BenchTransform::ALL)
}

/// Runs on the calling thread only; one untimed warm-up call precedes the
/// timed repeats of each transform.
pub fn transform_bench_with(sizes: &[usize], repeats: usize, transforms: &[BenchTransform]) -> Result<Vec<BenchRow>> {
    if repeats == 0 {
        return Err(invalid("bench repeats must be at least 1"));
    }
    if sizes.is_empty() {
        return Err(invalid("bench needs at least one size"));
    }
    if let Some(bad) = sizes.iter().find(|&&n| n < BENCH_MIN_SIZE) {
        return Err(invalid(format!("bench size {bad} is below the minimum {BENCH_MIN_SIZE}")));
    }
    let mut rows = Vec::new();
    for &n in sizes {
        let g = DenseMatrix::random_gaussian(n, n, &mut seeded(BENCH_SEED ^ n as u64));
        for &t in transforms {
            if t == BenchTransform::ExactPolar && n > SVD_MAX_DIM {
                continue;
            }
            std::hint::black_box(t.run(&g)?);
            let mut times = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let start = Instant::now();
                std::hint::black_box(t.run(std::hint::black_box(&g))?);
                times.push(start.elapsed().as_secs_f64());
            }
            let m = mean(&times);
            let std = if repeats > 1 {
                (times.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (repeats - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(BenchRow {
                size: n,
                transform: t.name(),
                mean_seconds: m,
                std_seconds: std,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::transforms::auon_transform;
    use rand_distr::{Distribution, StandardNormal};

    fn step_with(rhos: &[f64], sigma2: f64) -> StepDiagnostics {
        StepDiagnostics {
            step: 0,
            loss: 1.0,
            layers: rhos
                .iter()
                .map(|&r| LayerDiagnostics {
                    name: "w".into(),
                    rho: r,
                    sigma2,
                    update_spectral_norm: 0.5,
                    rms_statistic: 1.0,
                })
                .collect(),
        }
    }

    #[test]
    fn alignment_examples() {
        let g = DenseMatrix::random_gaussian(4, 3, &mut seeded(1));
        assert!((alignment_sample(&g, &g, ALIGNMENT_EPS).unwrap() - 1.0).abs() < 1e-10);
        assert!((alignment_sample(&g, &g.scale(-1.0), ALIGNMENT_EPS).unwrap() + 1.0).abs() < 1e-10);
        assert!(alignment_sample(&g, &DenseMatrix::zeros(3, 4), ALIGNMENT_EPS).is_err());
    }

    #[test]
    fn alignment_of_auon_has_closed_form() {
        let g = DenseMatrix::random_gaussian(5, 4, &mut seeded(2)).scale(1e-3);
        let (u, rep) = auon_transform(&g, FROBENIUS_EPS, RMS_EPS);
        let rho = alignment_sample(&g, &u, ALIGNMENT_EPS).unwrap();
        let fro = g.frobenius_norm();
        let closed = fro * fro / ((fro + FROBENIUS_EPS) * (rep.rms_statistic + RMS_EPS)) / (fro * fro + ALIGNMENT_EPS);
        assert!(rho > 0.0);
        assert!((rho - closed).abs() <= 1e-12 * closed);
        // ‖g‖² dominates ε, so this is 1/((‖g‖_F+ε₀)(r+ε)) to high accuracy
        let simple = 1.0 / ((fro + FROBENIUS_EPS) * (rep.rms_statistic + RMS_EPS));
        assert!((rho - simple).abs() <= 1e-5 * simple);
    }

    #[test]
    fn percentile_interpolates() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!((percentile(&xs, 10.0) - 1.9).abs() < 1e-15);
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 100.0), 10.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn aggregate_constant() {
        let steps = vec![step_with(&[3.0, 3.0], 0.9), step_with(&[3.0, 3.0], 0.7)];
        let k = aggregate_steps(&steps).unwrap();
        assert_eq!((k.kappa_median, k.kappa_p10), (3.0, 3.0));
        assert!((k.sigma2_mean - 0.8).abs() < 1e-15);
        assert!(aggregate_steps(&[]).is_err());
    }

    #[test]
    fn bootstrap_constant_and_containment() {
        let ci = bootstrap_ci(&[2.5; 10], Statistic::Median, 1).unwrap();
        assert_eq!((ci.lo, ci.point, ci.hi), (2.5, 2.5, 2.5));
        assert_eq!(ci.iterations, 2000);
        let mut rng = seeded(3);
        for seed in 0..20 {
            let xs: Vec<f64> = (0..15).map(|_| StandardNormal.sample(&mut rng)).collect();
            for stat in [Statistic::Median, Statistic::Mean] {
                let ci = bootstrap_ci(&xs, stat, seed).unwrap();
                assert!(ci.lo <= ci.point && ci.point <= ci.hi);
            }
        }
        assert!(bootstrap_ci(&[1.0], Statistic::Mean, 0).is_err());
    }

    #[test]
    fn bootstrap_is_deterministic_across_execution_modes() {
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = bootstrap_ci_with(&xs, Statistic::Median, 9, 500, 0.95, Execution::Sequential).unwrap();
        let b = bootstrap_ci_with(&xs, Statistic::Median, 9, 500, 0.95, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_width_shrinks_with_more_data() {
        let mut narrower = 0;
        for seed in 0..10u64 {
            let mut rng = seeded(100 + seed);
            let big: Vec<f64> = (0..400).map(|_| StandardNormal.sample(&mut rng)).collect();
            let small = &big[..100];
            let w = |xs: &[f64]| {
                let ci = bootstrap_ci(xs, Statistic::Mean, seed).unwrap();
                ci.hi - ci.lo
            };
            if w(&big) < w(small) {
                narrower += 1;
            }
        }
        assert!(narrower >= 9, "only {narrower}/10 seeds narrowed");
    }

    #[test]
    fn correlation_energy_examples() {
        assert_eq!(correlation_energy(&DenseMatrix::zeros(3, 2)), (0.0, 0.0));
        let q = crate::linalg::polar_factor(&DenseMatrix::random_gaussian(6, 3, &mut seeded(4))).unwrap();
        let (t, r) = correlation_energy(&q);
        assert!((t - 3.0).abs() < 1e-10 && r < 1e-10, "{t} {r}");
    }

    #[test]
    fn trajectory_of_orthogonal_follows_polynomial() {
        let q = crate::linalg::polar_factor(&DenseMatrix::random_gaussian(5, 5, &mut seeded(6))).unwrap();
        let traj = singular_trajectory(&q, 3, NsCoeffs::HYBRID).unwrap();
        let mut s = 1.0 / (5f64.sqrt() + FROBENIUS_EPS);
        for spectrum in &traj.spectra {
            assert!(spectrum.iter().all(|x| (x - s).abs() < 1e-12), "{spectrum:?} vs {s}");
            s = NsCoeffs::HYBRID.apply_scalar(s);
        }
    }

    #[test]
    fn trajectory_step_zero_is_normalized_spectrum() {
        let g = DenseMatrix::random_gaussian(7, 4, &mut seeded(8));
        let traj = singular_trajectory(&g, 2, NsCoeffs::MUON).unwrap();
        let oracle = svd_jacobi(&normalize_frobenius(&g, FROBENIUS_EPS)).unwrap().sigma;
        for (a, b) in traj.spectra[0].iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(traj.spectra.len(), 3);
        assert!(singular_trajectory(&DenseMatrix::zeros(3, 3), 2, NsCoeffs::MUON).is_err());
    }

    #[test]
    fn bench_validates_input() {
        assert!(transform_bench(&[32], 0).is_err());
        assert!(transform_bench(&[8], 1).is_err());
        assert!(transform_bench(&[], 1).is_err());
        let rows = transform_bench(&[16, 32], 1).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.mean_seconds >= 0.0 && r.std_seconds == 0.0));
    }
}

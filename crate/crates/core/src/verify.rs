//! Seeded random batteries checking the cosh-RMS trust-region properties
//! against the Jacobi SVD oracle.
//!
//! Every sample is regenerated from `(seed, shape, distribution)`, so a
//! reported counterexample can be replayed with [`sample_matrix`]. Samples
//! are evaluated through [`map_indexed`] and therefore give identical
//! outcomes under sequential and parallel execution.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::Serialize;

use crate::diagnostics::correlation_energy;
use crate::linalg::svd_jacobi;
use crate::matrix::DenseMatrix;
use crate::parallel::{map_indexed, Execution};
use crate::rng::{derive_seed, seeded};
use crate::transforms::{auon, cosh_rms_scale, hybrid, normalize_frobenius, NsCoeffs, FROBENIUS_EPS, RMS_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EntryDistribution {
    Gaussian,
    Uniform,
    /// Cauchy entries clipped to `±HEAVY_TAIL_CLIP`.
    HeavyTail,
}

pub const HEAVY_TAIL_CLIP: f64 = 1e3;

impl EntryDistribution {
    pub const ALL: [Self; 3] = [Self::Gaussian, Self::Uniform, Self::HeavyTail];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Uniform => "uniform",
            Self::HeavyTail => "heavy-tail",
        }
    }
}

pub fn sample_matrix(seed: u64, rows: usize, cols: usize, dist: EntryDistribution) -> DenseMatrix {
    let mut rng = seeded(seed);
    match dist {
        EntryDistribution::Gaussian => DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal)),
        EntryDistribution::Uniform => DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)),
        EntryDistribution::HeavyTail => {
            let cauchy: Cauchy<f64> = Cauchy::new(0.0, 1.0).expect("unit Cauchy");
            DenseMatrix::from_fn(rows, cols, |_, _| {
                cauchy.sample(&mut rng).clamp(-HEAVY_TAIL_CLIP, HEAVY_TAIL_CLIP)
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub distribution: EntryDistribution,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub samples: usize,
    pub violations: Vec<Counterexample>,
    /// Smallest `bound − value` seen (negative on violation). For
    /// relative-error checks, `tolerance − worst error`.
    pub worst_margin: f64,
    /// Largest checked value seen.
    pub worst_value: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Check {
    value: f64,
    bound: f64,
}

impl Check {
    /// `value <= bound`, or `value < bound` when `strict`.
    fn holds(&self, strict: bool) -> bool {
        if strict {
            self.value < self.bound
        } else {
            self.value <= self.bound
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    seed: u64,
    rows: usize,
    cols: usize,
    dist: EntryDistribution,
}

fn collect(name: &str, samples: &[Sample], checks: &[Check], strict: bool) -> PropertyOutcome {
    let mut violations = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut worst_value = f64::NEG_INFINITY;
    for (s, c) in samples.iter().zip(checks) {
        worst_margin = worst_margin.min(c.bound - c.value);
        worst_value = worst_value.max(c.value);
        if !c.holds(strict) {
            violations.push(Counterexample {
                seed: s.seed,
                rows: s.rows,
                cols: s.cols,
                distribution: s.dist,
                value: c.value,
                bound: c.bound,
            });
        }
    }
    PropertyOutcome {
        name: name.to_string(),
        samples: samples.len(),
        violations,
        worst_margin,
        worst_value,
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Shape schedule: `(rows, cols, count)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryConfig {
    pub seed: u64,
    pub shapes: Vec<(usize, usize, usize)>,
    pub exec: Execution,
}

impl BatteryConfig {
    /// 1,000 matrices over five shapes, distributions cycling per sample.
    pub fn trust_region_default(seed: u64) -> Self {
        Self {
            seed,
            shapes: vec![(8, 8, 300), (32, 16, 250), (16, 32, 250), (64, 64, 170), (256, 256, 30)],
            exec: Execution::default(),
        }
    }

    pub fn total(&self) -> usize {
        self.shapes.iter().map(|s| s.2).sum()
    }

    /// Same distribution of shapes, each count replaced by `count`.
    pub fn with_uniform_count(mut self, count: usize) -> Self {
        self.shapes.iter_mut().for_each(|s| s.2 = count);
        self
    }

    fn samples(&self, salt: u64) -> Vec<Sample> {
        let mut out = Vec::with_capacity(self.total());
        for &(rows, cols, count) in &self.shapes {
            for _ in 0..count {
                let i = out.len();
                out.push(Sample {
                    seed: derive_seed(self.seed ^ salt, i as u64),
                    rows,
                    cols,
                    dist: EntryDistribution::ALL[i % 3],
                });
            }
        }
        out
    }
}

/// Per-sample measurements of the cosh-RMS output `U` of a random input.
#[derive(Debug, Clone, Copy)]
struct TrustMeasure {
    spectral: f64,
    frob: f64,
    r: f64,
    r_lower: f64,
    tail_bound: f64,
}

fn measure_trust(s: &Sample) -> TrustMeasure {
    let g = sample_matrix(s.seed, s.rows, s.cols, s.dist);
    let normalized = normalize_frobenius(&g, FROBENIUS_EPS);
    let (u, r) = auon(&g, FROBENIUS_EPS, RMS_EPS);
    let n = u.len() as f64;
    let spectral = svd_jacobi(&u).expect("battery shapes are within the oracle cap").sigma[0];
    let a = normalized.max_abs();
    TrustMeasure {
        spectral,
        frob: u.frobenius_norm(),
        r,
        r_lower: (1.0 + normalized.frobenius_norm_sq() / n).sqrt(),
        tail_bound: n.sqrt() / a.cosh(),
    }
}

/// Spectral trust region, the cosh-RMS lower bound, tail suppression at the
/// realized largest entry, and the Frobenius (variance) bound.
pub fn trust_region_battery(cfg: &BatteryConfig) -> Vec<PropertyOutcome> {
    let samples = cfg.samples(0x7255);
    let m = map_indexed(samples.len(), cfg.exec, |i| measure_trust(&samples[i]));
    let checks = |f: &dyn Fn(&TrustMeasure) -> Check| m.iter().map(f).collect::<Vec<_>>();
    vec![
        collect(
            "spectral norm < 1",
            &samples,
            &checks(&|t| Check { value: t.spectral, bound: 1.0 }),
            true,
        ),
        collect(
            "spectral norm <= 1/(r+eps)",
            &samples,
            &checks(&|t| Check { value: t.spectral, bound: 1.0 / (t.r + RMS_EPS) }),
            false,
        ),
        collect(
            "r >= sqrt(1 + |update|_F^2/N)",
            &samples,
            &checks(&|t| Check { value: t.r_lower, bound: t.r }),
            false,
        ),
        collect(
            "spectral norm <= sqrt(N)/cosh(max entry)",
            &samples,
            &checks(&|t| Check { value: t.spectral, bound: t.tail_bound }),
            false,
        ),
        collect(
            "frobenius norm <= 1/(r+eps)",
            &samples,
            &checks(&|t| Check { value: t.frob, bound: 1.0 / (t.r + RMS_EPS) }),
            false,
        ),
        collect(
            "frobenius norm squared < 1",
            &samples,
            &checks(&|t| Check { value: t.frob * t.frob, bound: 1.0 }),
            true,
        ),
    ]
}

/// Spike magnitudes used by the tail-suppression battery.
pub const DEFAULT_SPIKES: [f64; 3] = [2.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy)]
struct SpikeMeasure {
    spectral: f64,
    n: f64,
    update_spectral: f64,
    cosh_a: f64,
}

/// Builds a unit-Frobenius background, overwrites one entry with `±a` and
/// applies the cosh-RMS scaling directly to that update.
fn measure_spike(s: &Sample, a: f64) -> SpikeMeasure {
    let mut rng = seeded(s.seed);
    let background = normalize_frobenius(&sample_matrix(rng.random(), s.rows, s.cols, s.dist), FROBENIUS_EPS);
    let mut update = background;
    let (i, j) = (rng.random_range(0..s.rows), rng.random_range(0..s.cols));
    update[(i, j)] = if rng.random::<bool>() { a } else { -a };
    let (u, _) = cosh_rms_scale(&update, RMS_EPS).expect("spike magnitudes are below the cosh limit");
    SpikeMeasure {
        spectral: svd_jacobi(&u).expect("within oracle cap").sigma[0],
        n: u.len() as f64,
        update_spectral: svd_jacobi(&update).expect("within oracle cap").sigma[0],
        cosh_a: a.cosh(),
    }
}

/// For each spike magnitude: the `sqrt(N)/cosh(a)` bound, the looser
/// `N/cosh(a)` bound, and `‖update‖₂·sqrt(N)/cosh(a)`, which follows from
/// `r >= cosh(a)/sqrt(N)` without assuming `‖update‖₂ <= 1`.
pub fn spike_battery(cfg: &BatteryConfig, spikes: &[f64]) -> Vec<PropertyOutcome> {
    let mut out = Vec::new();
    for &a in spikes {
        let samples = cfg.samples(0x5911 ^ a.to_bits());
        let m = map_indexed(samples.len(), cfg.exec, |i| measure_spike(&samples[i], a));
        let checks =
            |f: &dyn Fn(&SpikeMeasure) -> Check| m.iter().map(f).collect::<Vec<_>>();
        out.push(collect(
            &format!("spike a={a}: spectral norm <= sqrt(N)/cosh(a)"),
            &samples,
            &checks(&|t| Check { value: t.spectral, bound: t.n.sqrt() / t.cosh_a }),
            false,
        ));
        out.push(collect(
            &format!("spike a={a}: spectral norm <= N/cosh(a)"),
            &samples,
            &checks(&|t| Check { value: t.spectral, bound: t.n / t.cosh_a }),
            false,
        ));
        out.push(collect(
            &format!("spike a={a}: spectral norm <= |update|_2 sqrt(N)/cosh(a)"),
            &samples,
            &checks(&|t| Check { value: t.spectral, bound: t.update_spectral * t.n.sqrt() / t.cosh_a }),
            false,
        ));
    }
    out
}

pub const IDENTITY_TOL: f64 = 1e-10;

/// `trace(UᵀU)` and the isotropy residual equal the normalized-input
/// quantities divided by `(r+ε)²`; also `trace(UᵀU) = ‖G̃‖_F²/(r+ε)²`.
pub fn correlation_energy_battery(cfg: &BatteryConfig) -> Vec<PropertyOutcome> {
    let samples = cfg.samples(0xc0e1);
    let m = map_indexed(samples.len(), cfg.exec, |i| {
        let s = &samples[i];
        let g = sample_matrix(s.seed, s.rows, s.cols, s.dist);
        let normalized = normalize_frobenius(&g, FROBENIUS_EPS);
        let (u, r) = auon(&g, FROBENIUS_EPS, RMS_EPS);
        let f = (r + RMS_EPS).powi(2);
        let (tu, ru) = correlation_energy(&u);
        let (tg, rg) = correlation_energy(&normalized);
        (
            relative_error(tu, tg / f),
            relative_error(ru, rg / f),
            relative_error(tu, normalized.frobenius_norm_sq() / f),
        )
    });
    let tol = |f: &dyn Fn(&(f64, f64, f64)) -> f64| {
        m.iter()
            .map(|x| Check { value: f(x), bound: IDENTITY_TOL })
            .collect::<Vec<_>>()
    };
    let mut outs = vec![
        collect("trace(U^T U) = trace(G^T G)/(r+eps)^2", &samples, &tol(&|x| x.0), false),
        collect("isotropy residual scales by 1/(r+eps)^2", &samples, &tol(&|x| x.1), false),
        collect("trace(U^T U) = |G|_F^2/(r+eps)^2", &samples, &tol(&|x| x.2), false),
    ];
    for o in &mut outs {
        // report margins against the tolerance, values are relative errors
        o.worst_margin = IDENTITY_TOL - o.worst_value;
    }
    outs
}

pub const SCALE_INVARIANCE_TOL: f64 = 1e-6;
pub const SCALE_FACTORS: [f64; 3] = [0.5, 2.0, 100.0];

/// Max entrywise `|U(G) − U(cG)|` over the scale factors.
pub fn scale_invariance_battery(cfg: &BatteryConfig) -> PropertyOutcome {
    let samples = cfg.samples(0x5ca1);
    let checks = map_indexed(samples.len(), cfg.exec, |i| {
        let s = &samples[i];
        let g = sample_matrix(s.seed, s.rows, s.cols, s.dist);
        let (u, _) = auon(&g, FROBENIUS_EPS, RMS_EPS);
        let worst = SCALE_FACTORS
            .iter()
            .map(|&c| u.max_abs_diff(&auon(&g.scale(c), FROBENIUS_EPS, RMS_EPS).0))
            .fold(0.0, f64::max);
        Check { value: worst, bound: SCALE_INVARIANCE_TOL }
    });
    collect("scale invariance |U(G) - U(cG)| <= 1e-6", &samples, &checks, false)
}

/// `U = c·G̃` for one positive `c`: every nonzero entry ratio agrees with
/// the first one to 1e-12 relative.
pub fn direction_battery(cfg: &BatteryConfig) -> PropertyOutcome {
    let samples = cfg.samples(0xd1e);
    let checks = map_indexed(samples.len(), cfg.exec, |i| {
        let s = &samples[i];
        let g = sample_matrix(s.seed, s.rows, s.cols, s.dist);
        let normalized = normalize_frobenius(&g, FROBENIUS_EPS);
        let (u, _) = auon(&g, FROBENIUS_EPS, RMS_EPS);
        let ratios: Vec<f64> = normalized
            .as_slice()
            .iter()
            .zip(u.as_slice())
            .filter(|(x, _)| **x != 0.0)
            .map(|(x, y)| y / x)
            .collect();
        let c0 = ratios[0];
        let spread = if c0 > 0.0 {
            ratios.iter().map(|c| relative_error(*c, c0)).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        Check { value: spread, bound: 1e-12 }
    });
    collect("direction preserved (U = c G~, c > 0)", &samples, &checks, false)
}

/// Hybrid output spectral norm strictly below one.
pub fn hybrid_battery(cfg: &BatteryConfig, steps: usize, coeffs: NsCoeffs) -> PropertyOutcome {
    let samples = cfg.samples(0x4b1d);
    let checks = map_indexed(samples.len(), cfg.exec, |i| {
        let s = &samples[i];
        let g = sample_matrix(s.seed, s.rows, s.cols, s.dist);
        let (u, _) = hybrid(&g, steps, coeffs).expect("random samples are nonzero");
        Check {
            value: svd_jacobi(&u).expect("within oracle cap").sigma[0],
            bound: 1.0,
        }
    });
    collect("hybrid spectral norm < 1", &samples, &checks, true)
}

/// Every default battery: trust region (1,000 matrices), correlation-energy
/// identities, scale invariance, direction preservation and the hybrid
/// bound.
pub fn default_suite(seed: u64, exec: Execution) -> Vec<PropertyOutcome> {
    let small = |shapes: Vec<(usize, usize, usize)>| BatteryConfig { seed, shapes, exec };
    let mut out = trust_region_battery(&BatteryConfig {
        exec,
        ..BatteryConfig::trust_region_default(seed)
    });
    out.extend(correlation_energy_battery(&small(vec![
        (8, 8, 50),
        (32, 16, 50),
        (16, 32, 50),
        (64, 64, 50),
    ])));
    out.push(scale_invariance_battery(&small(vec![(8, 8, 25), (32, 16, 25), (16, 32, 25), (64, 64, 25)])));
    out.push(direction_battery(&small(vec![(8, 8, 50), (32, 16, 50), (16, 32, 50)])));
    out.push(hybrid_battery(
        &small(vec![(8, 8, 167), (32, 16, 167), (16, 32, 166)]),
        1,
        NsCoeffs::HYBRID,
    ));
    out
}

/// Spike battery schedule: 60 matrices per spike magnitude.
pub fn spike_config(seed: u64, exec: Execution) -> BatteryConfig {
    BatteryConfig {
        seed,
        shapes: vec![(8, 8, 20), (32, 16, 20), (64, 64, 20)],
        exec,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> BatteryConfig {
        BatteryConfig {
            seed,
            shapes: vec![(4, 4, 6), (6, 3, 6), (3, 6, 6)],
            exec: Execution::Sequential,
        }
    }

    #[test]
    fn samples_are_reproducible() {
        let a = sample_matrix(5, 3, 4, EntryDistribution::HeavyTail);
        assert_eq!(a, sample_matrix(5, 3, 4, EntryDistribution::HeavyTail));
        assert!(a.max_abs() <= HEAVY_TAIL_CLIP);
        let u = sample_matrix(5, 30, 30, EntryDistribution::Uniform);
        assert!(u.max_abs() < 1.0);
    }

    #[test]
    fn small_batteries_pass() {
        for o in trust_region_battery(&tiny(1)) {
            assert!(o.passed(), "{o:?}");
            assert_eq!(o.samples, 18);
        }
        for o in correlation_energy_battery(&tiny(2)) {
            assert!(o.passed(), "{o:?}");
        }
        assert!(scale_invariance_battery(&tiny(3)).passed());
        assert!(direction_battery(&tiny(4)).passed());
        assert!(hybrid_battery(&tiny(5), 1, NsCoeffs::HYBRID).passed());
    }

    #[test]
    fn execution_modes_agree() {
        let seq = trust_region_battery(&tiny(9));
        let par = trust_region_battery(&BatteryConfig {
            exec: Execution::Parallel,
            ..tiny(9)
        });
        assert_eq!(seq, par);
    }

    #[test]
    fn violations_carry_replayable_seed() {
        let outs = spike_battery(&tiny(7), &[10.0]);
        let gating = &outs[0];
        assert!(!gating.passed());
        let cx = &gating.violations[0];
        assert!(cx.value > cx.bound);
        // the corrected bound holds for every sample
        assert!(outs[2].passed());
    }
}

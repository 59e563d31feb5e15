//! Randomized invariants over the public API.

use proptest::prelude::*;

use crate::diagnostics::{bootstrap_ci_with, Statistic};
use crate::linalg::{polar_factor, spectral_norm, svd_jacobi, RANK_THRESHOLD};
use crate::nn::train;
use crate::transforms::{auon, hybrid, newton_schulz, FROBENIUS_EPS, RMS_EPS};
use crate::{DenseMatrix, Execution, NsCoeffs, OptimizerConfig, OptimizerKind, RunConfig};

fn matrix(max_dim: usize, range: f64) -> impl Strategy<Value = DenseMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(move |(r, c)| {
        prop::collection::vec(-range..range, r * c).prop_map(move |d| DenseMatrix::new(r, c, d).unwrap())
    })
}

fn nonzero(max_dim: usize, range: f64) -> impl Strategy<Value = DenseMatrix> {
    matrix(max_dim, range).prop_filter("nonzero", |m| m.frobenius_norm() > 1e-6)
}

fn orthonormality_error(m: &DenseMatrix) -> f64 {
    m.gram_cols().max_abs_diff(&DenseMatrix::identity(m.cols()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn svd_reconstructs_and_is_orthonormal(m in matrix(64, 5.0)) {
        let svd = svd_jacobi(&m).unwrap();
        let scale = m.max_abs().max(1.0);
        prop_assert!(svd.reconstruct().max_abs_diff(&m) <= 1e-10 * scale);
        prop_assert!(orthonormality_error(&svd.u) <= 1e-10);
        prop_assert!(orthonormality_error(&svd.v) <= 1e-10);
        prop_assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(svd.sigma.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn norm_ordering(m in nonzero(24, 3.0)) {
        let top = svd_jacobi(&m).unwrap().sigma[0];
        let frob = m.frobenius_norm();
        let k = m.rows().min(m.cols()) as f64;
        prop_assert!(top <= frob * (1.0 + 1e-12));
        prop_assert!(frob <= k.sqrt() * top * (1.0 + 1e-12));
        let power = spectral_norm(&m, 1e-12, 100_000).unwrap_or(top);
        prop_assert!((power - top).abs() <= 1e-6 * top);
    }

    #[test]
    fn polar_matches_oracle(m in nonzero(16, 2.0)) {
        let q = polar_factor(&m).unwrap();
        let svd = svd_jacobi(&m).unwrap();
        let rank = svd.numerical_rank(RANK_THRESHOLD);
        // ⟨Q, M⟩ equals the nuclear norm and Q has exactly `rank` unit
        // singular values.
        let nuclear: f64 = svd.sigma.iter().sum();
        prop_assert!((q.dot(&m) - nuclear).abs() <= 1e-10 * nuclear.max(1.0));
        let qs = svd_jacobi(&q).unwrap().sigma;
        for (i, s) in qs.iter().enumerate() {
            let want = if i < rank { 1.0 } else { 0.0 };
            prop_assert!((s - want).abs() <= 1e-10, "sigma {} = {}", i, s);
        }
    }

    #[test]
    fn auon_contracts_and_keeps_direction(m in nonzero(20, 50.0)) {
        let (u, r) = auon(&m, FROBENIUS_EPS, RMS_EPS);
        let top = svd_jacobi(&u).unwrap().sigma[0];
        prop_assert!(top < 1.0);
        prop_assert!(top <= 1.0 / (r + RMS_EPS) * (1.0 + 1e-12));
        prop_assert!(r >= 1.0);
        let c = u.frobenius_norm() / m.frobenius_norm();
        prop_assert!(u.max_abs_diff(&m.scale(c)) <= 1e-12 * u.max_abs().max(1e-300));
    }

    #[test]
    fn auon_scale_invariant(m in nonzero(20, 5.0), c in 1e-2..1e3f64) {
        let (a, _) = auon(&m, FROBENIUS_EPS, RMS_EPS);
        let (b, _) = auon(&m.scale(c), FROBENIUS_EPS, RMS_EPS);
        prop_assert!(a.max_abs_diff(&b) <= 1e-6);
    }

    #[test]
    fn hybrid_zero_steps_is_auon(m in nonzero(12, 5.0)) {
        let (h, rh) = hybrid(&m, 0, NsCoeffs::HYBRID).unwrap();
        let (a, ra) = auon(&m, FROBENIUS_EPS, RMS_EPS);
        prop_assert_eq!(h, a);
        prop_assert_eq!(rh, ra);
    }

    #[test]
    fn newton_schulz_tall_is_transposed_wide(m in nonzero(12, 5.0), steps in 1..4usize) {
        let a = newton_schulz(&m, steps, NsCoeffs::MUON).unwrap();
        let b = newton_schulz(&m.transpose(), steps, NsCoeffs::MUON).unwrap().transpose();
        prop_assert!(a.max_abs_diff(&b) <= 1e-12);
    }

    #[test]
    fn bootstrap_contains_point(samples in prop::collection::vec(-5.0..5.0f64, 2..40), seed in any::<u64>()) {
        for stat in [Statistic::Median, Statistic::Mean] {
            let ci = bootstrap_ci_with(&samples, stat, seed, 200, 0.95, Execution::Sequential).unwrap();
            prop_assert!(ci.lo <= ci.point && ci.point <= ci.hi);
        }
    }
}

fn short_run(kind: OptimizerKind, steps: usize) -> RunConfig {
    RunConfig {
        optimizer: OptimizerConfig::for_kind(kind),
        steps,
        ..RunConfig::default()
    }
}

const KINDS: [OptimizerKind; 5] = [
    OptimizerKind::AuON,
    OptimizerKind::HybridAuON,
    OptimizerKind::MuonNS,
    OptimizerKind::SgdMomentum,
    OptimizerKind::AdamW,
];

#[test]
fn training_is_deterministic() {
    for kind in KINDS {
        let cfg = short_run(kind, 10);
        assert_eq!(train(&cfg).unwrap(), train(&cfg).unwrap(), "{kind:?}");
    }
}

#[test]
fn every_optimizer_is_stable_for_200_steps() {
    for kind in KINDS {
        let log = train(&short_run(kind, 200)).unwrap();
        assert!(log.steps.iter().all(|s| s.loss.is_finite()), "{kind:?}");
        assert!(log.final_loss < log.steps[0].loss, "{kind:?}: {}", log.final_loss);
    }
}

#[test]
fn zero_learning_rate_keeps_loss_constant() {
    for kind in KINDS {
        let mut cfg = short_run(kind, 5);
        cfg.optimizer.lr = 0.0;
        let log = train(&cfg).unwrap();
        let first = log.steps[0].loss;
        assert!(log.steps.iter().all(|s| s.loss == first), "{kind:?}");
        assert_eq!(log.final_loss, first);
    }
}

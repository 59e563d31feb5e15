use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 10_000;

const START_SEED: u64 = 0x005e_ed0f_9001;

struct PowerRun {
    estimate: f64,
    iterations: usize,
    converged: bool,
}

fn run(m: &DenseMatrix, tol: f64, max_iter: usize) -> PowerRun {
    let (rows, cols) = m.shape();
    let a = m.as_slice();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut v);
    let mut mv = vec![0.0; rows];
    let mut w = vec![0.0; cols];
    let mut prev = f64::NAN;

    for it in 1..=max_iter {
        // mv = m v
        for (i, out) in mv.iter_mut().enumerate() {
            *out = a[i * cols..(i + 1) * cols].iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let sigma = norm(&mv);
        if sigma == 0.0 {
            return PowerRun {
                estimate: 0.0,
                iterations: it,
                converged: true,
            };
        }
        if (sigma - prev).abs() < tol * sigma {
            return PowerRun {
                estimate: sigma,
                iterations: it,
                converged: true,
            };
        }
        prev = sigma;
        // w = mᵀ (m v)
        w.iter_mut().for_each(|x| *x = 0.0);
        for (i, &s) in mv.iter().enumerate() {
            for (wj, x) in w.iter_mut().zip(&a[i * cols..(i + 1) * cols]) {
                *wj += x * s;
            }
        }
        v.copy_from_slice(&w);
        normalize(&mut v);
    }
    PowerRun {
        estimate: prev,
        iterations: max_iter,
        converged: false,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Largest singular value by power iteration on `mᵀm`.
///
/// Stops once successive estimates differ by less than `tol` relative to the
/// current estimate. Exhausting `max_iter` yields [`Error::NotConverged`]
/// carrying the last estimate.
pub fn spectral_norm(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(crate::error::invalid(format!("power iteration tol must be > 0, got {tol}")));
    }
    let r = run(m, tol, max_iter.max(1));
    if r.converged {
        Ok(r.estimate)
    } else {
        Err(Error::NotConverged {
            iterations: r.iterations,
            estimate: r.estimate,
        })
    }
}

/// Default-tolerance spectral norm that falls back to the last estimate when
/// iteration does not converge. For reporting only.
pub fn spectral_norm_estimate(m: &DenseMatrix) -> f64 {
    run(m, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd_jacobi;
    use crate::rng::seeded;

    #[test]
    fn identity_and_diagonal() {
        let s = spectral_norm(&DenseMatrix::identity(4), DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        let s = spectral_norm(&DenseMatrix::from_diag(&[3.0, 1.0]), DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!((s - 3.0).abs() < 1e-9);
    }

    #[test]
    fn matches_svd_oracle_on_random() {
        let m = DenseMatrix::random_gaussian(16, 8, &mut seeded(3));
        let s = spectral_norm(&m, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        let oracle = svd_jacobi(&m).unwrap().sigma[0];
        assert!((s - oracle).abs() <= 1e-8 * oracle, "{s} vs {oracle}");
    }

    #[test]
    fn zero_matrix_is_zero() {
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 2), 1e-10, 10).unwrap(), 0.0);
    }

    #[test]
    fn reports_non_convergence() {
        let m = DenseMatrix::random_gaussian(16, 16, &mut seeded(9));
        match spectral_norm(&m, 1e-15, 2) {
            Err(Error::NotConverged { iterations, estimate }) => {
                assert_eq!(iterations, 2);
                assert!(estimate > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
        assert!(spectral_norm(&m, 0.0, 10).is_err());
    }
}

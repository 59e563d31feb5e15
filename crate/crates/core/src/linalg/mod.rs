//! Norms, the Jacobi SVD oracle, power iteration and the polar factor.
//!
//! Everything here is a pure function of its inputs and runs in double
//! precision; these routines are the reference that the transform theorems
//! are checked against.

mod power;
mod svd;

pub use power::{spectral_norm, spectral_norm_estimate, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL};
pub use svd::{svd_jacobi, SvdResult, SVD_MAX_DIM};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative cutoff `σᵢ > RANK_THRESHOLD · σ₁` for numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-10;

pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.frobenius_norm()
}

/// Number of singular values above `RANK_THRESHOLD · σ₁`.
pub fn numerical_rank(m: &DenseMatrix) -> Result<usize> {
    Ok(svd_jacobi(m)?.numerical_rank(RANK_THRESHOLD))
}

/// Polar factor `Q = U Vᵀ` built from the singular triples above the rank
/// threshold.
pub fn polar_factor(m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.is_zero() {
        return Err(Error::ZeroMatrix("polar factor"));
    }
    let svd = svd_jacobi(m)?;
    let rank = svd.numerical_rank(RANK_THRESHOLD);
    let (rows, cols) = m.shape();
    let mut q = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            q[(i, j)] = (0..rank).map(|k| svd.u[(i, k)] * svd.v[(j, k)]).sum();
        }
    }
    Ok(q)
}

/// RMS-matching factor `‖G‖_F / sqrt(rank G)`.
pub fn alpha_scale(g: &DenseMatrix) -> Result<f64> {
    if g.is_zero() {
        return Err(Error::ZeroMatrix("alpha scale"));
    }
    let rank = numerical_rank(g)?;
    Ok(g.frobenius_norm() / (rank as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn max_sigma_dev_from_one(m: &DenseMatrix) -> f64 {
        let s = svd_jacobi(m).unwrap();
        let r = s.numerical_rank(RANK_THRESHOLD);
        s.sigma[..r].iter().fold(0.0, |acc, x| acc.max((x - 1.0).abs()))
    }

    #[test]
    fn frobenius_examples() {
        assert!((frobenius_norm(&DenseMatrix::identity(2)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius_norm(&DenseMatrix::zeros(3, 3)), 0.0);
        let m = DenseMatrix::from_rows(&[&[3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_norm(&m), 5.0);
    }

    #[test]
    fn polar_of_orthogonal_is_itself() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let q = DenseMatrix::from_rows(&[&[c, -s], &[s, c]]).unwrap();
        assert!(polar_factor(&q).unwrap().max_abs_diff(&q) < 1e-8);
    }

    #[test]
    fn polar_of_positive_diagonal_is_identity() {
        let p = polar_factor(&DenseMatrix::from_diag(&[2.0, 0.5])).unwrap();
        assert!(p.max_abs_diff(&DenseMatrix::identity(2)) < 1e-12);
        let p = polar_factor(&DenseMatrix::from_diag(&[5.0, 0.1])).unwrap();
        assert!(p.max_abs_diff(&DenseMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn polar_of_random_tall_is_semi_orthogonal() {
        let g = DenseMatrix::random_gaussian(6, 3, &mut seeded(11));
        let q = polar_factor(&g).unwrap();
        assert!(max_sigma_dev_from_one(&q) < 1e-8);
        assert!(q.gram_cols().max_abs_diff(&DenseMatrix::identity(3)) < 1e-8);
    }

    #[test]
    fn polar_rejects_zero() {
        assert_eq!(
            polar_factor(&DenseMatrix::zeros(2, 2)),
            Err(Error::ZeroMatrix("polar factor"))
        );
    }

    #[test]
    fn alpha_scale_examples() {
        assert!((alpha_scale(&DenseMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-14);
        assert!((alpha_scale(&DenseMatrix::from_diag(&[2.0, 0.0, 0.0])).unwrap() - 2.0).abs() < 1e-14);
        let g = DenseMatrix::random_gaussian(4, 4, &mut seeded(5));
        assert_eq!(numerical_rank(&g).unwrap(), 4);
        assert!((alpha_scale(&g).unwrap() - g.frobenius_norm() / 2.0).abs() < 1e-14);
        assert!(alpha_scale(&DenseMatrix::zeros(2, 3)).is_err());
    }
}

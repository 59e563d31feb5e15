//! One-sided (Hestenes) Jacobi SVD.
//!
//! Columns of a working copy are rotated pairwise until every pair is
//! orthogonal to within `OFF_DIAGONAL_TOL` relative to the column norms. The
//! rotated columns then carry `σⱼ uⱼ` and the accumulated rotations form `V`.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Largest `min(rows, cols)` accepted by the oracle.
pub const SVD_MAX_DIM: usize = 512;

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m x k` with orthonormal columns.
    pub u: DenseMatrix,
    /// Non-increasing, length `k = min(m, n)`.
    pub sigma: Vec<f64>,
    /// `n x k` with orthonormal columns.
    pub v: DenseMatrix,
    pub sweeps: usize,
}

impl SvdResult {
    pub fn numerical_rank(&self, rel_threshold: f64) -> usize {
        match self.sigma.first() {
            Some(&s1) if s1 > 0.0 => self.sigma.iter().filter(|&&s| s > rel_threshold * s1).count(),
            _ => 0,
        }
    }

    /// `u · diag(sigma) · vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (k, s) in self.sigma.iter().enumerate() {
                us[(i, k)] *= s;
            }
        }
        us.matmul(&self.v.transpose())
    }
}

pub fn svd_jacobi(m: &DenseMatrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k > SVD_MAX_DIM {
        return Err(Error::TooLarge {
            dim: k,
            cap: SVD_MAX_DIM,
        });
    }
    if rows >= cols {
        Ok(tall(m))
    } else {
        // mᵀ = U Σ Vᵀ  =>  m = V Σ Uᵀ
        let t = tall(&m.transpose());
        Ok(SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
            sweeps: t.sweeps,
        })
    }
}

/// SVD of a matrix with `rows >= cols`.
fn tall(m: &DenseMatrix) -> SvdResult {
    let (rows, cols) = m.shape();
    // Column-major working copies so each column is contiguous.
    let mut a = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            a[j * rows + i] = m[(i, j)];
        }
    }
    let mut v = vec![0.0; cols * cols];
    for j in 0..cols {
        v[j * cols + j] = 1.0;
    }

    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (cp, cq) = column_pair(&mut a, rows, p, q);
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (x, y) in cp.iter().zip(cq.iter()) {
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= OFF_DIAGONAL_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(cp, cq, c, s);
                let (vp, vq) = column_pair(&mut v, cols, p, q);
                rotate(vp, vq, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, f64)> = (0..cols)
        .map(|j| (j, a[j * rows..(j + 1) * rows].iter().map(|x| x * x).sum::<f64>().sqrt()))
        .collect();
    order.sort_by(|x, y| y.1.total_cmp(&x.1));

    let mut u = DenseMatrix::zeros(rows, cols);
    let mut vm = DenseMatrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    let mut missing = Vec::new();
    for (dst, &(src, s)) in order.iter().enumerate() {
        sigma.push(s);
        for i in 0..cols {
            vm[(i, dst)] = v[src * cols + i];
        }
        if s > 0.0 {
            for i in 0..rows {
                u[(i, dst)] = a[src * rows + i] / s;
            }
        } else {
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut u, &missing);
    SvdResult {
        u,
        sigma,
        v: vm,
        sweeps,
    }
}

fn column_pair(buf: &mut [f64], len: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (head, tail) = buf.split_at_mut(q * len);
    (&mut head[p * len..(p + 1) * len], &mut tail[..len])
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to every
/// other column, drawing candidates from the standard basis.
fn complete_orthonormal(u: &mut DenseMatrix, missing: &[usize]) {
    let rows = u.rows();
    let mut filled: Vec<usize> = (0..u.cols()).filter(|j| !missing.contains(j)).collect();
    let mut basis = 0;
    for &col in missing {
        while basis < rows {
            let mut cand = vec![0.0; rows];
            cand[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for &f in &filled {
                    let proj: f64 = (0..rows).map(|i| u[(i, f)] * cand[i]).sum();
                    for (i, c) in cand.iter_mut().enumerate() {
                        *c -= proj * u[(i, f)];
                    }
                }
            }
            let n = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.5 {
                for (i, c) in cand.iter().enumerate() {
                    u[(i, col)] = c / n;
                }
                filled.push(col);
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn orthonormality_error(q: &DenseMatrix) -> f64 {
        q.gram_cols().max_abs_diff(&DenseMatrix::identity(q.cols()))
    }

    #[test]
    fn diagonal_input() {
        let s = svd_jacobi(&DenseMatrix::from_diag(&[2.0, 0.5])).unwrap();
        assert_eq!(s.sigma, vec![2.0, 0.5]);
        for f in [&s.u, &s.v] {
            for j in 0..2 {
                let col = f.column(j);
                assert_eq!(col.iter().filter(|x| x.abs() == 1.0).count(), 1);
                assert_eq!(col.iter().filter(|&&x| x == 0.0).count(), 1);
            }
        }
        // ascending diagonal must be reordered
        let s = svd_jacobi(&DenseMatrix::from_diag(&[0.5, 2.0])).unwrap();
        assert_eq!(s.sigma, vec![2.0, 0.5]);
        assert!(s.reconstruct().max_abs_diff(&DenseMatrix::from_diag(&[0.5, 2.0])) < 1e-15);
    }

    #[test]
    fn zero_matrix() {
        let s = svd_jacobi(&DenseMatrix::zeros(2, 3)).unwrap();
        assert_eq!(s.sigma, vec![0.0, 0.0]);
        assert_eq!(s.u.shape(), (2, 2));
        assert_eq!(s.v.shape(), (3, 2));
        assert!(orthonormality_error(&s.u) < 1e-15);
        assert!(orthonormality_error(&s.v) < 1e-15);
    }

    #[test]
    fn rank_deficient_completion() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]).unwrap();
        let s = svd_jacobi(&m).unwrap();
        assert!(s.sigma[1] < 1e-14);
        assert!(orthonormality_error(&s.u) < 1e-12);
        assert!(s.reconstruct().max_abs_diff(&m) < 1e-13);
    }

    #[test]
    fn random_reconstruction() {
        let m = DenseMatrix::random_gaussian(8, 5, &mut seeded(17));
        let s = svd_jacobi(&m).unwrap();
        let err = (&s.reconstruct() - &m).frobenius_norm() / m.frobenius_norm();
        assert!(err <= 1e-10, "reconstruction error {err}");
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        assert!(orthonormality_error(&s.u) < 1e-10);
        assert!(orthonormality_error(&s.v) < 1e-10);
    }

    #[test]
    fn wide_input() {
        let m = DenseMatrix::random_gaussian(3, 7, &mut seeded(2));
        let s = svd_jacobi(&m).unwrap();
        assert_eq!((s.u.shape(), s.v.shape(), s.sigma.len()), ((3, 3), (7, 3), 3));
        assert!((&s.reconstruct() - &m).frobenius_norm() / m.frobenius_norm() < 1e-10);
    }

    #[test]
    fn size_cap() {
        let m = DenseMatrix::zeros(SVD_MAX_DIM + 1, SVD_MAX_DIM + 1);
        assert_eq!(
            svd_jacobi(&m).unwrap_err(),
            Error::TooLarge {
                dim: SVD_MAX_DIM + 1,
                cap: SVD_MAX_DIM
            }
        );
        // a thin matrix with one huge side is fine
        assert!(svd_jacobi(&DenseMatrix::zeros(2000, 2)).is_ok());
    }
}

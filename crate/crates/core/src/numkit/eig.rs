//! Cyclic Jacobi eigendecomposition for real symmetric matrices.
//!
//! The matrices this library diagonalizes are small (Q <= 64), where Jacobi
//! sweeps are unconditionally stable and give orthonormal eigenvectors to
//! machine precision.

use super::RealMat;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const SYM_TOL: f64 = 1e-10;
const OFF_TOL: f64 = 1e-13;
pub(crate) const MAX_DIM: usize = 256;

fn off_diagonal_norm(a: &RealMat) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                acc += a.at(r, c) * a.at(r, c);
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a real symmetric matrix.
///
/// Returns eigenvalues sorted descending and the matching orthonormal
/// eigenvectors as the columns of the returned matrix, so that
/// `A v_k = lambda_k v_k`.
pub fn eig_sym_real(a: &RealMat) -> Result<(Vec<f64>, RealMat)> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::Dimension(format!(
            "eigensolver needs a nonempty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if n > MAX_DIM {
        return Err(Error::Dimension(format!(
            "eigensolver dimension {n} exceeds the supported maximum {MAX_DIM}"
        )));
    }
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    if a.symmetric_defect() > SYM_TOL * scale {
        return Err(Error::Dimension(format!(
            "matrix is not symmetric: max |A - A^T| = {:.3e} exceeds {:.3e}",
            a.symmetric_defect(),
            SYM_TOL * scale
        )));
    }

    let mut m = a.clone();
    // Symmetrize exactly so rotations keep both triangles consistent.
    for r in 0..n {
        for c in (r + 1)..n {
            let v = 0.5 * (m.at(r, c) + m.at(c, r));
            m.set(r, c, v);
            m.set(c, r, v);
        }
    }
    let mut v = RealMat::identity(n);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.at(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.at(p, p);
                let aqq = m.at(q, q);
                // Classic stable rotation parameters.
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m.at(k, p);
                    let mkq = m.at(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.at(p, k);
                    let mqk = m.at(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > OFF_TOL * scale {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps (off-diagonal {:.3e})",
            off_diagonal_norm(&m)
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.at(j, j).partial_cmp(&m.at(i, i)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.at(i, i)).collect();
    let vectors = RealMat::from_fn(n, n, |r, c| v.at(r, order[c]));
    Ok((eigenvalues, vectors))
}

//! The fixed Q x Q matrices behind the real-polynomial FCFO stage.
//!
//! `L` is the unitary column-conjugate-symmetric matrix that maps Hermitian
//! covariances to real ones. `Phi` expands the binomial basis
//! `(g+j)^q (g-j)^{Q-1-q}` in ascending powers of g; its entries are Gaussian
//! integers and are computed exactly, so the column conjugate symmetry
//! `Phi[q][q'] = conj(Phi[Q-1-q][q'])` holds bit-for-bit. The product
//! `Phi^H L` is accumulated over conjugate row pairs, whose imaginary parts
//! cancel exactly, leaving a genuinely real matrix.

use crate::error::{Error, Result};
use crate::numkit::{ComplexMat, RealMat};
use num_complex::Complex64;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Precomputed transform matrices for one repetition count Q.
#[derive(Debug, Clone)]
pub struct TransformMatrices {
    pub l_mat: ComplexMat,
    pub phi: ComplexMat,
    /// The real matrix `Phi^H L`.
    pub phi_h_l: RealMat,
    q: usize,
}

impl TransformMatrices {
    pub fn q(&self) -> usize {
        self.q
    }

    /// The Q x Q exchange matrix J.
    pub fn exchange(&self) -> RealMat {
        RealMat::exchange(self.q)
    }
}

/// The unitary column conjugate symmetric matrix L (even and odd blocks).
fn build_l(q: usize) -> ComplexMat {
    let mut l = ComplexMat::zeros(q, q);
    if q % 2 == 0 {
        let h = q / 2;
        for r in 0..h {
            l.set(r, r, Complex64::new(SQRT_HALF, 0.0));
            l.set(r, h + r, Complex64::new(0.0, SQRT_HALF));
        }
        for rr in 0..h {
            let r = h + rr;
            l.set(r, h - 1 - rr, Complex64::new(SQRT_HALF, 0.0));
            l.set(r, h + (h - 1 - rr), Complex64::new(0.0, -SQRT_HALF));
        }
    } else {
        let h = (q - 1) / 2;
        for r in 0..h {
            l.set(r, r, Complex64::new(SQRT_HALF, 0.0));
            l.set(r, h + 1 + r, Complex64::new(0.0, SQRT_HALF));
        }
        l.set(h, h, Complex64::new(1.0, 0.0));
        for rr in 0..h {
            let r = h + 1 + rr;
            l.set(r, h - 1 - rr, Complex64::new(SQRT_HALF, 0.0));
            l.set(r, h + 1 + (h - 1 - rr), Complex64::new(0.0, -SQRT_HALF));
        }
    }
    l
}

/// Binomial table C(n, k) for n, k <= max_n, exact.
fn binomials(max_n: usize) -> Vec<Vec<i128>> {
    let mut c = vec![vec![0i128; max_n + 1]; max_n + 1];
    for n in 0..=max_n {
        c[n][0] = 1;
        for k in 1..=n {
            c[n][k] = c[n - 1][k - 1] + if k < n { c[n - 1][k] } else { 0 };
        }
    }
    c
}

/// Multiply an exact integer by j^k.
fn int_times_j_power(value: i128, k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(value as f64, 0.0),
        1 => Complex64::new(0.0, value as f64),
        2 => Complex64::new(-(value as f64), 0.0),
        _ => Complex64::new(0.0, -(value as f64)),
    }
}

/// Coefficient matrix Phi: row q holds the ascending-power coefficients of
/// `(g+j)^q (g-j)^{Q-1-q}`.
fn build_phi(q_dim: usize) -> ComplexMat {
    let c = binomials(q_dim.saturating_sub(1));
    ComplexMat::from_fn(q_dim, q_dim, |q, qp| {
        let lo = (q + qp + 1).saturating_sub(q_dim);
        let hi = q.min(qp);
        let mut acc: i128 = 0;
        for qpp in lo..=hi {
            let term = c[q][qpp] * c[q_dim - 1 - q][qp - qpp];
            let sign_exp = (q_dim as i64 - 1 - q as i64 - qp as i64 + qpp as i64).rem_euclid(2);
            acc += if sign_exp == 0 { term } else { -term };
        }
        int_times_j_power(acc, q_dim - 1 - qp)
    })
}

/// `Phi^H L` accumulated over conjugate row pairs so the imaginary parts
/// cancel exactly.
fn build_phi_h_l(phi: &ComplexMat, l: &ComplexMat) -> RealMat {
    let q_dim = phi.rows();
    let half = q_dim / 2;
    RealMat::from_fn(q_dim, q_dim, |q, qp| {
        let mut acc = 0.0f64;
        for qpp in 0..half {
            let a = phi.at(qpp, q);
            let b = l.at(qpp, qp);
            // conj(a)*b + a*conj(b) = 2 Re(conj(a) b)
            acc += 2.0 * (a.re * b.re + a.im * b.im);
        }
        if q_dim % 2 == 1 {
            let center = (q_dim - 1) / 2;
            acc += phi.at(center, q).re * l.at(center, qp).re;
        }
        acc
    })
}

/// Build and verify the transform matrices for `2 <= Q <= 64`.
pub fn build_transform_matrices(q: usize) -> Result<TransformMatrices> {
    if !(2..=64).contains(&q) {
        return Err(Error::Config(format!(
            "transform matrices support 2 <= Q <= 64, got {q}"
        )));
    }
    let l_mat = build_l(q);
    let phi = build_phi(q);
    let phi_h_l = build_phi_h_l(&phi, &l_mat);

    // Construction-time invariant checks; all cheap at these sizes.
    let gram = l_mat.hermitian().mul(&l_mat);
    let mut defect = 0.0f64;
    for r in 0..q {
        for c in 0..q {
            let expect = if r == c { 1.0 } else { 0.0 };
            defect = defect.max((gram.at(r, c) - Complex64::new(expect, 0.0)).norm());
        }
    }
    if defect > 1e-12 {
        return Err(Error::Numerical(format!(
            "L is not unitary: defect {defect:.3e}"
        )));
    }
    for r in 0..q {
        for c in 0..q {
            let a = phi.at(r, c);
            let b = phi.at(q - 1 - r, c);
            if a.re != b.re || a.im != -b.im {
                return Err(Error::Numerical(format!(
                    "Phi column conjugate symmetry broken at ({r},{c})"
                )));
            }
        }
    }
    if q % 2 == 1 {
        let center = (q - 1) / 2;
        for c in 0..q {
            if phi.at(center, c).im != 0.0 {
                return Err(Error::Numerical(format!(
                    "Phi center row has an imaginary entry at column {c}"
                )));
            }
        }
    }
    Ok(TransformMatrices {
        l_mat,
        phi,
        phi_h_l,
        q,
    })
}

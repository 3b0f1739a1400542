//! Radix-2 decimation-in-time FFT with unitary normalization: both directions
//! scale by 1/sqrt(N), so `ifft(fft(x)) == x` and the transform preserves
//! Euclidean norm.

use super::ComplexVec;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

fn fft_inplace(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());

    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j ^= bit;
        if i < j {
            buf.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        let wn = Complex64::from_polar(1.0, step);
        let mut start = 0;
        while start < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..half {
                let u = buf[start + k];
                let t = w * buf[start + k + half];
                buf[start + k] = u + t;
                buf[start + k + half] = u - t;
                w *= wn;
            }
            start += len;
        }
        len <<= 1;
    }

    let scale = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

fn transform(x: &[Complex64], inverse: bool) -> Result<ComplexVec> {
    if x.is_empty() || !x.len().is_power_of_two() {
        return Err(Error::Dimension(format!(
            "FFT length must be a nonzero power of two, got {}",
            x.len()
        )));
    }
    let mut buf = x.to_vec();
    fft_inplace(&mut buf, inverse);
    Ok(buf)
}

/// Unitary forward DFT.
pub fn fft(x: &[Complex64]) -> Result<ComplexVec> {
    transform(x, false)
}

/// Unitary inverse DFT.
pub fn ifft(x: &[Complex64]) -> Result<ComplexVec> {
    transform(x, true)
}

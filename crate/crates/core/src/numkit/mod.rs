//! Self-contained numerical kernels: complex vectors/matrices, a radix-2 FFT,
//! a cyclic-Jacobi symmetric eigensolver and an Aberth-Ehrlich polynomial
//! root finder. Everything here is a pure function of its inputs.

mod eig;
mod fft;
mod poly;

pub use eig::eig_sym_real;
pub use fft::{fft, ifft};
pub use poly::{roots_real_poly, RealPoly, RootReport};

use num_complex::Complex64;

/// Contiguous complex vector. Finiteness of the elements is an obligation of
/// the producing operation, not of the alias itself.
pub type ComplexVec = Vec<Complex64>;

/// Dense row-major complex matrix with immutable dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0)
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul(&self, rhs: &ComplexMat) -> ComplexMat {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    let v = out.at(r, c) + a * rhs.at(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn hermitian(&self) -> ComplexMat {
        ComplexMat::from_fn(self.cols, self.rows, |r, c| self.at(c, r).conj())
    }

    pub fn scaled(&self, s: f64) -> ComplexMat {
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `J A* J` for square `A`: reverse both indices and conjugate.
    pub fn exchange_conj(&self) -> ComplexMat {
        ComplexMat::from_fn(self.rows, self.cols, |r, c| {
            self.at(self.rows - 1 - r, self.cols - 1 - c).conj()
        })
    }

    pub fn add(&self, rhs: &ComplexMat) -> ComplexMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// max |A - A^H| entrywise, as a Hermitian-ness witness.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                worst = worst.max((self.at(r, c) - self.at(c, r).conj()).norm());
            }
        }
        worst
    }
}

/// Dense row-major real matrix with immutable dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    /// Exchange matrix: ones on the anti-diagonal.
    pub fn exchange(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r + c == n - 1 { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul(&self, rhs: &RealMat) -> RealMat {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = RealMat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    let v = out.at(r, c) + a * rhs.at(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> RealMat {
        RealMat::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn symmetric_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in 0..self.cols {
                worst = worst.max((self.at(r, c) - self.at(c, r)).abs());
            }
        }
        worst
    }
}

//! Snapshot and channel-averaged Cramer-Rao bounds for the CFO.
//!
//! The bound is `N sigma_w^2 / (8 pi^2 h^H X^H B P_perp B X h)` with
//! `X = I_{Nr} (x) S` and `B` the diagonal sample-index weighting
//! `diag(N_g .. N_g+N-1)` repeated per antenna. The Kronecker structure means
//! only the per-antenna N x (Nt L) problem is ever touched: the projection is
//! applied with a Cholesky solve of the (Nt L) x (Nt L) Gram matrix, never an
//! explicit inverse.

use crate::error::{Error, Result};
use crate::numkit::{ifft, ComplexMat, ComplexVec};
use crate::seqdesign::{SystemConfig, TrainingSet};
use crate::sigmodel::ChannelSet;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
struct CholeskyFactor {
    dim: usize,
    lower: Vec<Complex64>,
}

impl CholeskyFactor {
    fn new(a: &ComplexMat) -> Result<Self> {
        let n = a.rows();
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..=r {
                let mut acc = a.at(r, c);
                for k in 0..c {
                    acc -= l[r * n + k] * l[c * n + k].conj();
                }
                if r == c {
                    if acc.re <= 0.0 || acc.im.abs() > 1e-8 * acc.re.abs().max(1e-300) {
                        return Err(Error::Numerical(
                            "training Gram matrix is not positive definite (rank-deficient S)"
                                .into(),
                        ));
                    }
                    l[r * n + c] = Complex64::new(acc.re.sqrt(), 0.0);
                } else {
                    l[r * n + c] = acc / l[c * n + c];
                }
            }
        }
        Ok(Self { dim: n, lower: l })
    }

    /// Solve `L L^H x = b`.
    fn solve(&self, b: &[Complex64]) -> ComplexVec {
        let n = self.dim;
        let mut y = b.to_vec();
        for r in 0..n {
            for k in 0..r {
                let t = self.lower[r * n + k] * y[k];
                y[r] -= t;
            }
            y[r] /= self.lower[r * n + r];
        }
        for r in (0..n).rev() {
            for k in (r + 1)..n {
                let t = self.lower[k * n + r].conj() * y[k];
                y[r] -= t;
            }
            y[r] /= self.lower[r * n + r];
        }
        y
    }
}

/// Per-config training operators: the N x (Nt L) mixing matrix S, its Gram
/// factor, and the sample-index weights of the B operator.
#[derive(Debug, Clone)]
pub struct ModelOperators {
    /// S: maps the stacked per-antenna channel to the clean time signal.
    s: ComplexMat,
    chol: CholeskyFactor,
    /// Diagonal of B: N_g .. N_g + N - 1.
    time_weights: Vec<f64>,
    tx_antennas: usize,
    taps: usize,
}

impl ModelOperators {
    /// Build S column-block by column-block: antenna mu's block is the
    /// circulant family of time-domain training shifts, so one inverse FFT
    /// of the antenna's frequency symbol provides all L columns.
    pub fn new(cfg: &SystemConfig, ts: &TrainingSet) -> Result<Self> {
        let n = cfg.subcarriers;
        let nt = cfg.tx_antennas;
        let taps = cfg.channel_taps;
        if ts.freq_symbols.len() != nt {
            return Err(Error::Dimension(
                "training set does not match config".into(),
            ));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let mut waves = Vec::with_capacity(nt);
        for sym in &ts.freq_symbols {
            waves.push(ifft(sym)?);
        }
        let s = ComplexMat::from_fn(n, nt * taps, |row, col| {
            let (mu, lag) = (col / taps, col % taps);
            waves[mu][(row + n - lag) % n] * scale
        });
        // Gram matrix S^H S, Hermitian by construction.
        let cols = nt * taps;
        let mut gram = ComplexMat::zeros(cols, cols);
        for a in 0..cols {
            for b in a..cols {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    acc += s.at(r, a).conj() * s.at(r, b);
                }
                gram.set(a, b, acc);
                gram.set(b, a, acc.conj());
            }
        }
        let chol = CholeskyFactor::new(&gram)?;
        let time_weights = (0..n).map(|i| (cfg.cp_len + i) as f64).collect();
        Ok(Self {
            s,
            chol,
            time_weights,
            tx_antennas: nt,
            taps,
        })
    }

    pub fn mixing_matrix(&self) -> &ComplexMat {
        &self.s
    }

    pub fn time_weights(&self) -> &[f64] {
        &self.time_weights
    }

    /// Stack one receive antenna's links into the h_nu vector.
    fn stack_links(&self, ch: &ChannelSet, rx: usize) -> ComplexVec {
        let mut h = Vec::with_capacity(self.tx_antennas * self.taps);
        for mu in 0..self.tx_antennas {
            h.extend_from_slice(ch.link(rx, mu));
        }
        h
    }

    /// `sum_nu || (I - P_S) B S h_nu ||^2`, the CRB denominator core.
    pub fn projection_denominator(&self, ch: &ChannelSet) -> Result<f64> {
        let n = self.s.rows();
        let cols = self.s.cols();
        let mut denom = 0.0;
        for rx in 0..ch.rx_antennas() {
            let h = self.stack_links(ch, rx);
            if h.len() != cols {
                return Err(Error::Dimension(
                    "channel set does not match the training operators".into(),
                ));
            }
            // u = B S h
            let mut u = vec![Complex64::new(0.0, 0.0); n];
            for (r, uu) in u.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                let row = self.s.row(r);
                for (c, hv) in h.iter().enumerate() {
                    acc += row[c] * hv;
                }
                *uu = acc * self.time_weights[r];
            }
            // rhs = S^H u, coeffs = (S^H S)^{-1} rhs via Cholesky solve
            let mut rhs = vec![Complex64::new(0.0, 0.0); cols];
            for (c, rv) in rhs.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    acc += self.s.at(r, c).conj() * u[r];
                }
                *rv = acc;
            }
            let coeffs = self.chol.solve(&rhs);
            // residual = u - S coeffs
            for r in 0..n {
                let mut proj = Complex64::new(0.0, 0.0);
                let row = self.s.row(r);
                for (c, cv) in coeffs.iter().enumerate() {
                    proj += row[c] * cv;
                }
                denom += (u[r] - proj).norm_sqr();
            }
        }
        Ok(denom)
    }
}

/// Snapshot CRB for one channel realization.
pub fn crb_snapshot(
    ch: &ChannelSet,
    ops: &ModelOperators,
    noise_var: f64,
    cfg: &SystemConfig,
) -> Result<f64> {
    let denom = ops.projection_denominator(ch)?;
    if denom <= 0.0 {
        return Err(Error::Numerical(
            "CRB denominator vanished; channel orthogonal to the weighted training".into(),
        ));
    }
    Ok(cfg.subcarriers as f64 * noise_var / (8.0 * PI * PI * denom))
}

/// Average the snapshot CRB over independent channel draws.
///
/// Returns `(mean, standard error)`.
pub fn average_crb(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    profile: &[f64],
    noise_var: f64,
    n_trials: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    if n_trials == 0 {
        return Err(Error::Config("average_crb needs at least one trial".into()));
    }
    let ops = ModelOperators::new(cfg, ts)?;
    let mut values = Vec::with_capacity(n_trials);
    for _ in 0..n_trials {
        let ch = crate::sigmodel::gen_channel(cfg, profile, rng)?;
        values.push(crb_snapshot(&ch, &ops, noise_var, cfg)?);
    }
    let mean = values.iter().sum::<f64>() / n_trials as f64;
    let stderr = if n_trials > 1 {
        let var =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_trials - 1) as f64;
        (var / n_trials as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

//! Integer-CFO design diagnostics: the alignment-energy kernels
//! `M^(mu,mu',mu'')(Delta_i)` and their separation ratio zeta.
//!
//! For constant-amplitude designs (TS0/TS1) the diagonal kernel has the
//! Dirichlet closed form `P/(Nt Q) * (sin(Q theta/2)/sin(theta/2))^2` and the
//! cross kernel factors through the training correlation alpha; both are
//! cross-checked against direct matrix evaluation on a deterministic sample
//! of grid points. Off-diagonal values use the `l = l' = 0` correlation lag.

use crate::error::{Error, Result};
use crate::numkit::{fft, ComplexVec};
use crate::rng::substream;
use crate::seqdesign::{alpha_direct, SystemConfig, TrainingSet, TrainingVariant};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Number of grid points at which the closed forms are verified directly.
const CROSSCHECK_POINTS: usize = 20;
const CROSSCHECK_TOL: f64 = 1e-8;
/// sin(theta/2) below this is treated as the removable/divergent point.
const SINGULARITY_EPS: f64 = 1e-9;

/// Diagnostic curves over a Delta_i grid for one antenna tuple.
#[derive(Debug, Clone)]
pub struct IcfoDiagnostics {
    /// (mu, mu', mu'') antenna indices of the tuple.
    pub tuple: (usize, usize, usize),
    /// psi = 2 pi (i_mu'' - i_mu) / Q, fixed per tuple.
    pub psi: f64,
    pub delta_grid: Vec<f64>,
    /// r(Delta_i) per grid point.
    pub r_values: Vec<f64>,
    /// theta = 2 pi (i_mu' - i_mu - Delta_i) / Q per grid point.
    pub thetas: Vec<f64>,
    /// Diagonal kernel value (independent of the lag).
    pub m_diag: Vec<f64>,
    /// |cross kernel| at lag (0, 0).
    pub m_offdiag_abs: Vec<f64>,
    /// Separation ratio; +infinity at the aligned shift.
    pub zeta: Vec<f64>,
    /// |alpha(mu, mu''; 0, 0)| entering the cross kernel.
    pub alpha_abs: f64,
    /// Worst |closed form - direct| seen during the cross-check.
    pub crosscheck_max_err: f64,
}

/// The sign convention of the range-normalization: sign(0) = 1.
fn sign_with_one_at_zero(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Normalize Delta_i into [-floor(Q/2), Q - floor(Q/2)).
pub fn r_delta(delta: f64, repetitions: usize) -> f64 {
    let q = repetitions as f64;
    let h = (repetitions / 2) as f64;
    delta - (sign_with_one_at_zero(delta - q + h) + sign_with_one_at_zero(delta + h)) * q / 2.0
}

/// Dirichlet form of the diagonal kernel.
fn m_diag_closed(theta: f64, cfg: &SystemConfig) -> f64 {
    let q = cfg.repetitions as f64;
    let p = cfg.block_len as f64;
    let nt = cfg.tx_antennas as f64;
    let s = (theta / 2.0).sin();
    let ratio = if s.abs() < SINGULARITY_EPS {
        q * q
    } else {
        let t = (q * theta / 2.0).sin() / s;
        t * t
    };
    p / (nt * q) * ratio
}

/// Cross kernel at lag (0,0); the two denominator zeros are removable and
/// both limits are zero.
fn m_offdiag_closed(alpha: Complex64, theta: f64, psi: f64, cfg: &SystemConfig) -> f64 {
    let q = cfg.repetitions as f64;
    let denom = (psi / 2.0).cos() - (theta - psi / 2.0).cos();
    if denom.abs() < SINGULARITY_EPS {
        return 0.0;
    }
    let num = 1.0 - (q * theta).cos();
    (alpha / q * (num / denom)).norm()
}

/// Separation ratio zeta; diverges where the diagonal kernel peaks.
fn zeta_closed(alpha: Complex64, theta: f64, psi: f64, cfg: &SystemConfig) -> f64 {
    let p = cfg.block_len as f64;
    let nt = cfg.tx_antennas as f64;
    if (theta / 2.0).sin().abs() < SINGULARITY_EPS {
        return f64::INFINITY;
    }
    let cot = |x: f64| (x).cos() / (x).sin();
    p / (nt * alpha.norm()) * (psi / 2.0).sin().abs() * (cot(psi / 2.0) - cot(theta / 2.0)).abs()
}

/// Columns of S_mu: the time-domain training wave of antenna mu and its
/// first L circular shifts (scaled by sqrt(N) relative to the CRB operator).
fn s_columns(cfg: &SystemConfig, ts: &TrainingSet, mu: usize) -> Result<Vec<ComplexVec>> {
    let n = cfg.subcarriers;
    let wave = crate::numkit::ifft(&ts.freq_symbols[mu])?;
    Ok((0..cfg.channel_taps)
        .map(|lag| (0..n).map(|row| wave[(row + n - lag) % n]).collect())
        .collect())
}

/// Direct evaluation of `[M^(mu,mu',mu'')(Delta)]_{0,0}` and the diagonal
/// `[M^(mu,mu',mu)(Delta)]_{0,0}` through the projection definition.
fn m_direct(
    cfg: &SystemConfig,
    s_mu: &[ComplexVec],
    s_mupp: &[ComplexVec],
    pilot_comb: usize,
    delta: f64,
) -> Result<Complex64> {
    let n = cfg.subcarriers;
    let project = |col: &ComplexVec| -> Result<ComplexVec> {
        let rotated: ComplexVec = col
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                v * Complex64::from_polar(1.0, 2.0 * PI * delta * idx as f64 / n as f64)
            })
            .collect();
        let spec = fft(&rotated)?;
        Ok((0..cfg.block_len)
            .map(|p| spec[pilot_comb + p * cfg.repetitions])
            .collect())
    };
    let a = project(&s_mu[0])?;
    let b = project(&s_mupp[0])?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(&b) {
        acc += x.conj() * y;
    }
    Ok(acc)
}

/// Evaluate the diagnostic curves for one antenna tuple over a Delta_i grid.
///
/// For TS0/TS1 the closed forms are used and cross-checked against the
/// direct evaluation at a deterministic sample of grid points; for RS every
/// point is evaluated directly.
pub fn icfo_diagnostics(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    tuple: (usize, usize, usize),
    grid_step: f64,
) -> Result<IcfoDiagnostics> {
    let (mu, mu_p, mu_pp) = tuple;
    let nt = cfg.tx_antennas;
    if mu >= nt || mu_p >= nt || mu_pp >= nt {
        return Err(Error::Config(format!(
            "tuple {tuple:?} out of range for Nt = {nt}"
        )));
    }
    if mu == mu_pp {
        return Err(Error::Config(
            "the cross kernel needs mu'' different from mu".into(),
        ));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::Config(format!(
            "grid step {grid_step} outside (0, 0.5]"
        )));
    }
    let q = cfg.repetitions as f64;
    let h = (cfg.repetitions / 2) as f64;
    let psi = 2.0 * PI * (cfg.pilot_offsets[mu_pp] as f64 - cfg.pilot_offsets[mu] as f64) / q;
    let alpha = alpha_direct(cfg, ts, mu, mu_pp, 0, 0);
    let closed_form_ok = matches!(ts.variant, TrainingVariant::Ts0 | TrainingVariant::Ts1);

    // Grid over one period [-floor(Q/2), Q - floor(Q/2)).
    let steps = (q / grid_step).round() as i64;
    let mut delta_grid = Vec::new();
    for k in 0..steps {
        delta_grid.push(-h + k as f64 * grid_step);
    }

    let s_mu = s_columns(cfg, ts, mu)?;
    let s_mupp = s_columns(cfg, ts, mu_pp)?;
    let comb = cfg.pilot_offsets[mu_p];

    let mut r_values = Vec::with_capacity(delta_grid.len());
    let mut thetas = Vec::with_capacity(delta_grid.len());
    let mut m_diag = Vec::with_capacity(delta_grid.len());
    let mut m_off = Vec::with_capacity(delta_grid.len());
    let mut zeta = Vec::with_capacity(delta_grid.len());
    for &delta in &delta_grid {
        let theta =
            2.0 * PI * (cfg.pilot_offsets[mu_p] as f64 - cfg.pilot_offsets[mu] as f64 - delta) / q;
        r_values.push(r_delta(delta, cfg.repetitions));
        thetas.push(theta);
        if closed_form_ok {
            let d = m_diag_closed(theta, cfg);
            let o = m_offdiag_closed(alpha, theta, psi, cfg);
            m_diag.push(d);
            m_off.push(o);
            zeta.push(zeta_closed(alpha, theta, psi, cfg));
        } else {
            let d = m_direct(cfg, &s_mu, &s_mu, comb, delta)?.norm();
            let o = m_direct(cfg, &s_mu, &s_mupp, comb, delta)?.norm();
            m_diag.push(d);
            m_off.push(o);
            zeta.push(if o < SINGULARITY_EPS * d.max(1.0) {
                f64::INFINITY
            } else {
                d / o
            });
        }
    }

    // Deterministic spot check of the closed forms.
    let mut crosscheck_max_err = 0.0f64;
    if closed_form_ok {
        let mut rng = substream(cfg.seed, "icfodiag-crosscheck", &[mu as u64, mu_pp as u64]);
        use rand::Rng;
        for _ in 0..CROSSCHECK_POINTS {
            let idx = rng.gen_range(0..delta_grid.len());
            let delta = delta_grid[idx];
            let direct_diag = m_direct(cfg, &s_mu, &s_mu, comb, delta)?;
            let direct_off = m_direct(cfg, &s_mu, &s_mupp, comb, delta)?;
            crosscheck_max_err = crosscheck_max_err
                .max((direct_diag.norm() - m_diag[idx]).abs())
                .max((direct_off.norm() - m_off[idx]).abs());
        }
        if crosscheck_max_err > CROSSCHECK_TOL * (cfg.subcarriers as f64 / nt as f64) {
            return Err(Error::Numerical(format!(
                "closed-form kernels disagree with direct evaluation by {crosscheck_max_err:.3e}"
            )));
        }
    }

    Ok(IcfoDiagnostics {
        tuple,
        psi,
        delta_grid,
        r_values,
        thetas,
        m_diag,
        m_offdiag_abs: m_off,
        zeta,
        alpha_abs: alpha.norm(),
        crosscheck_max_err,
    })
}

impl IcfoDiagnostics {
    /// CSV rows `r_delta,m_diag,m_offdiag_abs,zeta`; divergent zeta values
    /// are written as the string `inf`.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("r_delta,m_diag,m_offdiag_abs,zeta\n");
        for k in 0..self.delta_grid.len() {
            let z = if self.zeta[k].is_finite() {
                format!("{}", self.zeta[k])
            } else {
                "inf".to_string()
            };
            out.push_str(&format!(
                "{},{},{},{z}\n",
                self.r_values[k], self.m_diag[k], self.m_offdiag_abs[k]
            ));
        }
        out
    }

    /// Value of the diagonal kernel at the grid point nearest r.
    pub fn m_diag_at_r(&self, r: f64) -> f64 {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (k, &rv) in self.r_values.iter().enumerate() {
            if (rv - r).abs() < dist {
                dist = (rv - r).abs();
                best = k;
            }
        }
        self.m_diag[best]
    }
}

//! Design-quality diagnostics for training sets.
//!
//! The central object is the cross-correlation table
//! `[T]_{l,l'} = (s_mu^(l))^T D_P((i_mu - i_mu')) (s_mu'^(l'))^*`
//! whose off-diagonal blocks measure the multi-antenna interference a design
//! leaks into the FCFO covariance. For the Chu constructions the table has a
//! closed form, which is evaluated alongside the direct inner products as a
//! self-check.

use super::config::SystemConfig;
use super::training::{TrainingSet, TrainingVariant};
use crate::error::{Error, Result};
use crate::numkit::RealMat;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Cross-correlation tables and placement metrics for one training set.
#[derive(Debug, Clone)]
pub struct DesignDiagnostics {
    /// |T| per ordered antenna pair, indexed `[mu * Nt + mu'] (l, l')`.
    pub t_abs: Vec<RealMat>,
    /// |alpha| per ordered antenna pair, same indexing.
    pub alpha_abs: Vec<RealMat>,
    /// varpi per ordered pair: (i_mu - i_mu') / Q.
    pub varpi: Vec<f64>,
    /// min over ordered pairs of (i_mu' - i_mu) mod Q.
    pub min_circular_gap: usize,
    /// min over nonzero shifts of (1-l)^T l^(q).
    pub min_shift_correlation: usize,
    /// Largest |closed form - direct| over all cross-check entries
    /// (zero when no closed form applies, i.e. RS).
    pub closed_form_max_err: f64,
    /// max |T| off the alignment diagonal divided by the aligned peak,
    /// over cross-antenna pairs (the magnitude-separation ratio).
    pub offpeak_to_peak_ratio: Option<f64>,
    /// Cross-antenna alpha entries at or above P/Nt away from alignment.
    pub alpha_bound_violations: usize,
}

/// Shift index p_{mu,l} of the underlying Chu sequence for TS0/TS1.
fn chu_shift_index(cfg: &SystemConfig, variant: TrainingVariant, mu: usize, lag: usize) -> i64 {
    match variant {
        TrainingVariant::Ts0 => (mu * cfg.shift_step() + lag) as i64,
        TrainingVariant::Ts1 => lag as i64,
        TrainingVariant::Rs => unreachable!("no Chu shift index for RS"),
    }
}

/// Direct inner-product evaluation of one T entry.
fn t_direct(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    mu: usize,
    mu_p: usize,
    l: usize,
    l_p: usize,
) -> Complex64 {
    let p_len = cfg.block_len;
    let n = cfg.subcarriers as f64;
    let diff = cfg.pilot_offsets[mu] as f64 - cfg.pilot_offsets[mu_p] as f64;
    let a = &ts.time_blocks[mu];
    let b = &ts.time_blocks[mu_p];
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..p_len {
        let ramp = Complex64::from_polar(1.0, 2.0 * PI * diff * p as f64 / n);
        acc +=
            a[(p + p_len - l % p_len) % p_len] * ramp * b[(p + p_len - l_p % p_len) % p_len].conj();
    }
    acc
}

/// Closed-form T entry for the Chu constructions.
fn t_closed_form(
    cfg: &SystemConfig,
    variant: TrainingVariant,
    mu: usize,
    mu_p: usize,
    l: usize,
    l_p: usize,
) -> Complex64 {
    let p = cfg.block_len as f64;
    let nt = cfg.tx_antennas as f64;
    let v = cfg.chu_root as i64;
    let p1 = chu_shift_index(cfg, variant, mu, l);
    let p2 = chu_shift_index(cfg, variant, mu_p, l_p);
    let d = p1 - p2;
    let varpi =
        (cfg.pilot_offsets[mu] as f64 - cfg.pilot_offsets[mu_p] as f64) / cfg.repetitions as f64;

    if mu == mu_p {
        // Zero autocorrelation: only full-period alignment survives.
        let aligned = (v * d).rem_euclid(cfg.block_len as i64) == 0;
        return Complex64::new(if aligned { p / nt } else { 0.0 }, 0.0);
    }
    let vd = v * d;
    let sign = if (vd + 1).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    let quad = Complex64::from_polar(1.0, PI * v as f64 * (p1 * p1 - p2 * p2) as f64 / p);
    let lin = Complex64::from_polar(1.0, -PI * (p - 1.0) * (vd as f64 - varpi) / p);
    let ratio = (PI * varpi).sin() / (PI * (vd as f64 - varpi) / p).sin();
    sign * quad * lin * ratio / nt
}

/// Direct evaluation of one alpha entry
/// `alpha(mu, mu''; l, l') = e^{j2pi(l i_mu - l' i_mu'')/N} (s_mu^(l))^H D_P(i_mu'' - i_mu) s_mu''^(l')`.
pub(crate) fn alpha_direct(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    mu: usize,
    mu_pp: usize,
    l: usize,
    l_p: usize,
) -> Complex64 {
    let p_len = cfg.block_len;
    let n = cfg.subcarriers as f64;
    let diff = cfg.pilot_offsets[mu_pp] as f64 - cfg.pilot_offsets[mu] as f64;
    let a = &ts.time_blocks[mu];
    let b = &ts.time_blocks[mu_pp];
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..p_len {
        let ramp = Complex64::from_polar(1.0, 2.0 * PI * diff * p as f64 / n);
        acc +=
            a[(p + p_len - l % p_len) % p_len].conj() * ramp * b[(p + p_len - l_p % p_len) % p_len];
    }
    let front = Complex64::from_polar(
        1.0,
        2.0 * PI
            * (l as f64 * cfg.pilot_offsets[mu] as f64
                - l_p as f64 * cfg.pilot_offsets[mu_pp] as f64)
            / n,
    );
    front * acc
}

/// Compute the full diagnostics table set for a training set.
///
/// For TS0/TS1 every T entry is additionally evaluated through the closed
/// form; a disagreement beyond 1e-8 is a numerical error.
pub fn design_diagnostics(ts: &TrainingSet, cfg: &SystemConfig) -> Result<DesignDiagnostics> {
    let nt = cfg.tx_antennas;
    let lmax = cfg.channel_taps;
    let has_closed_form = matches!(ts.variant, TrainingVariant::Ts0 | TrainingVariant::Ts1);

    let mut t_abs = Vec::with_capacity(nt * nt);
    let mut alpha_abs = Vec::with_capacity(nt * nt);
    let mut varpi = Vec::with_capacity(nt * nt);
    let mut max_err = 0.0f64;
    let mut peak = 0.0f64;
    let mut offpeak = 0.0f64;
    let mut alpha_violations = 0usize;
    let alpha_bound = cfg.block_len as f64 / nt as f64;

    for mu in 0..nt {
        for mu_p in 0..nt {
            varpi.push(
                (cfg.pilot_offsets[mu] as f64 - cfg.pilot_offsets[mu_p] as f64)
                    / cfg.repetitions as f64,
            );
            let mut tm = RealMat::zeros(lmax, lmax);
            let mut am = RealMat::zeros(lmax, lmax);
            for l in 0..lmax {
                for l_p in 0..lmax {
                    let direct = t_direct(cfg, ts, mu, mu_p, l, l_p);
                    tm.set(l, l_p, direct.norm());
                    if has_closed_form {
                        let closed = t_closed_form(cfg, ts.variant, mu, mu_p, l, l_p);
                        max_err = max_err.max((closed - direct).norm());
                        if mu != mu_p {
                            let aligned = chu_shift_index(cfg, ts.variant, mu, l)
                                == chu_shift_index(cfg, ts.variant, mu_p, l_p);
                            if aligned {
                                peak = peak.max(direct.norm());
                            } else {
                                offpeak = offpeak.max(direct.norm());
                            }
                        }
                    }
                    let alpha = alpha_direct(cfg, ts, mu, mu_p, l, l_p);
                    am.set(l, l_p, alpha.norm());
                    if mu != mu_p && alpha.norm() >= alpha_bound {
                        let aligned = has_closed_form
                            && chu_shift_index(cfg, ts.variant, mu, l)
                                == chu_shift_index(cfg, ts.variant, mu_p, l_p);
                        if !aligned {
                            alpha_violations += 1;
                        }
                    }
                }
            }
            t_abs.push(tm);
            alpha_abs.push(am);
        }
    }

    if has_closed_form && max_err > 1e-8 {
        return Err(Error::Numerical(format!(
            "closed-form T disagrees with direct computation by {max_err:.3e}"
        )));
    }

    Ok(DesignDiagnostics {
        t_abs,
        alpha_abs,
        varpi,
        min_circular_gap: cfg.min_circular_gap(),
        min_shift_correlation: cfg.min_shift_correlation(),
        closed_form_max_err: if has_closed_form { max_err } else { 0.0 },
        offpeak_to_peak_ratio: if has_closed_form && peak > 0.0 {
            Some(offpeak / peak)
        } else {
            None
        },
        alpha_bound_violations: alpha_violations,
    })
}

impl DesignDiagnostics {
    /// Render the per-pair peak |T| values as a short text table.
    pub fn render_text(&self, cfg: &SystemConfig) -> String {
        let nt = cfg.tx_antennas;
        let mut out = String::new();
        out.push_str(&format!(
            "min circular pilot gap: {}\nmin shift correlation:  {}\n",
            self.min_circular_gap, self.min_shift_correlation
        ));
        if let Some(r) = self.offpeak_to_peak_ratio {
            out.push_str(&format!("off-peak / peak |T|:    {r:.3e}\n"));
        }
        out.push_str(&format!(
            "alpha bound violations: {}\n",
            self.alpha_bound_violations
        ));
        out.push_str("max |T| per antenna pair (rows mu, cols mu'):\n");
        for mu in 0..nt {
            for mu_p in 0..nt {
                let m = &self.t_abs[mu * nt + mu_p];
                out.push_str(&format!("  {:>10.4}", m.max_abs()));
            }
            out.push('\n');
        }
        out
    }

    /// CSV rows `mu,mu_prime,l,l_prime,t_abs,alpha_abs`.
    pub fn render_csv(&self, cfg: &SystemConfig) -> String {
        let nt = cfg.tx_antennas;
        let lmax = cfg.channel_taps;
        let mut out = String::from("mu,mu_prime,l,l_prime,t_abs,alpha_abs\n");
        for mu in 0..nt {
            for mu_p in 0..nt {
                let tm = &self.t_abs[mu * nt + mu_p];
                let am = &self.alpha_abs[mu * nt + mu_p];
                for l in 0..lmax {
                    for l_p in 0..lmax {
                        out.push_str(&format!(
                            "{mu},{mu_p},{l},{l_p},{},{}\n",
                            tm.at(l, l_p),
                            am.at(l, l_p)
                        ));
                    }
                }
            }
        }
        out
    }
}

//! FCFO recovery: noise-space polynomial construction and the root-to-offset
//! mapping.
//!
//! With `W = Phi^H L` real and the signal basis `E` real, the matrix
//! `W (I - E E^T) W^T` is real symmetric and its anti-diagonal sums are the
//! coefficients of the degree-2(Q-1) polynomial whose near-real roots sit at
//! `g_mu = cot(pi beta_mu / Q)`.

use super::transform::TransformMatrices;
use super::SubspaceDecomposition;
use crate::error::{AmbiguityInfo, Error, Result};
use crate::numkit::{RealMat, RealPoly};
use crate::seqdesign::SystemConfig;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Roots whose cotangent is this large sit essentially at beta = 0 (mod Q),
/// where the mapping is ill-conditioned.
const COT_CONDITIONING_LIMIT: f64 = 1e6;

/// Build the real FCFO polynomial from a subspace decomposition.
pub fn fcfo_polynomial(dec: &SubspaceDecomposition, tm: &TransformMatrices) -> Result<RealPoly> {
    let q = tm.q();
    let e = &dec.signal_basis;
    if e.rows() != q {
        return Err(Error::Dimension(
            "signal basis does not match the transform dimension".into(),
        ));
    }
    // Noise-space projector I - E E^T.
    let nt = e.cols();
    let mut proj = RealMat::identity(q);
    for r in 0..q {
        for c in 0..q {
            let mut acc = 0.0;
            for k in 0..nt {
                acc += e.at(r, k) * e.at(c, k);
            }
            proj.set(r, c, proj.at(r, c) - acc);
        }
    }
    let w = &tm.phi_h_l;
    let m = w.mul(&proj).mul(&w.transpose());

    let mut coeffs = vec![0.0f64; 2 * q - 1];
    for a in 0..q {
        for b in 0..q {
            coeffs[a + b] += m.at(a, b);
        }
    }
    let max_coeff = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if max_coeff == 0.0 || !max_coeff.is_finite() {
        return Err(Error::Degenerate(
            "FCFO polynomial vanished; signal basis spans the whole space".into(),
        ));
    }
    Ok(RealPoly::new(coeffs))
}

/// One conjugate root pair (or a lone real root) as an FCFO candidate.
#[derive(Debug, Clone)]
pub struct RootCandidate {
    pub real_part: f64,
    pub imag_abs: f64,
    /// Equivalent CFO in (0, Q) from the cotangent mapping.
    pub beta: f64,
    /// Window index and signed offset when the candidate landed in one.
    pub window: Option<(usize, f64)>,
}

/// Selection outcome of the window rule.
#[derive(Debug, Clone)]
pub struct FcfoSelection {
    /// The Nt candidates with the smallest |Im|, window-matched first on ties.
    pub selected: Vec<RootCandidate>,
    /// Per matched root: window index.
    pub matched_windows: Vec<usize>,
    /// Per matched root: fractional CFO.
    pub per_root_fcfos: Vec<f64>,
    /// Mean of the matched fractional CFOs.
    pub fcfo: f64,
    pub warnings: Vec<String>,
}

/// Signed circular difference folded into [-Q/2, Q/2).
pub fn circular_difference(x: f64, q: f64) -> f64 {
    let d = x.rem_euclid(q);
    if d >= q / 2.0 {
        d - q
    } else {
        d
    }
}

fn window_match(beta: f64, cfg: &SystemConfig) -> Option<(usize, f64)> {
    let q = cfg.repetitions as f64;
    let mut best: Option<(usize, f64)> = None;
    for (idx, &off) in cfg.pilot_offsets.iter().enumerate() {
        let d = circular_difference(beta - off as f64, q);
        if d.abs() < cfg.window_radius {
            match best {
                Some((_, prev)) if prev.abs() <= d.abs() => {}
                _ => best = Some((idx, d)),
            }
        }
    }
    best
}

/// Group the conjugate-closed root multiset into candidates.
fn extract_candidates(roots: &[Complex64], cfg: &SystemConfig) -> Vec<RootCandidate> {
    let q = cfg.repetitions as f64;
    let mut pool: Vec<Complex64> = roots.to_vec();
    let mut out = Vec::new();
    while let Some(r) = pool.pop() {
        // Conjugate closure is bit-exact, so the partner search is too.
        if let Some(pos) = pool.iter().position(|c| c.re == r.re && c.im == -r.im) {
            pool.swap_remove(pos);
        }
        let beta = (q / PI * f64::atan2(1.0, r.re)).rem_euclid(q);
        out.push(RootCandidate {
            real_part: r.re,
            imag_abs: r.im.abs(),
            beta,
            window: window_match(beta, cfg),
        });
    }
    out
}

/// Steps 1-4 of the FCFO recovery: select the Nt most circle-like root
/// pairs, map them through the cotangent to equivalent CFOs, resolve each
/// against its pilot window and average the matched offsets.
pub fn map_roots_to_fcfo(
    roots: &[Complex64],
    icfo: i64,
    cfg: &SystemConfig,
) -> Result<FcfoSelection> {
    let nt = cfg.tx_antennas;
    let mut candidates = extract_candidates(roots, cfg);
    if candidates.len() < nt {
        return Err(Error::Ambiguity(Box::new(AmbiguityInfo {
            icfo,
            betas: candidates.iter().map(|c| c.beta).collect(),
            reason: format!("only {} root pairs available, need {nt}", candidates.len()),
        })));
    }
    // Smallest |Im| first; among equals prefer window-matched candidates.
    candidates.sort_by(|a, b| {
        (a.imag_abs, a.window.is_none())
            .partial_cmp(&(b.imag_abs, b.window.is_none()))
            .unwrap()
    });
    let selected: Vec<RootCandidate> = candidates.into_iter().take(nt).collect();

    let mut warnings = Vec::new();
    let mut matched_windows = Vec::new();
    let mut per_root_fcfos = Vec::new();
    for cand in &selected {
        if cand.real_part.abs() > COT_CONDITIONING_LIMIT {
            warnings.push(format!(
                "root at cot = {:.3e} maps to beta near 0 mod Q; poorly conditioned",
                cand.real_part
            ));
        }
        match cand.window {
            Some((idx, offset)) => {
                if matched_windows.contains(&idx) {
                    warnings.push(format!("pilot window {idx} matched by more than one root"));
                }
                matched_windows.push(idx);
                per_root_fcfos.push(offset);
            }
            None => warnings.push(format!(
                "root with beta = {:.4} fell outside every pilot window; dropped",
                cand.beta
            )),
        }
    }
    if per_root_fcfos.is_empty() {
        return Err(Error::Ambiguity(Box::new(AmbiguityInfo {
            icfo,
            betas: selected.iter().map(|c| c.beta).collect(),
            reason: "no selected root landed in a pilot window".into(),
        })));
    }
    let fcfo = per_root_fcfos.iter().sum::<f64>() / per_root_fcfos.len() as f64;
    Ok(FcfoSelection {
        selected,
        matched_windows,
        per_root_fcfos,
        fcfo,
        warnings,
    })
}

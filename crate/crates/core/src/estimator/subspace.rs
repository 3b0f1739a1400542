//! Stacking, covariance and the real-transformed signal subspace.
//!
//! The corrected observation of each receive antenna is reshaped into Q rows
//! of P samples; row q of antenna nu is the block `y_nu[qP .. qP+P]`. Across
//! rows each antenna contributes complex exponentials at the equivalent CFOs
//! `beta_mu = eps_f + i_mu`, so the column space of the stack is spanned by
//! Q-point steering vectors, exactly as in DOA estimation on a ULA.

use super::transform::TransformMatrices;
use crate::error::{Error, Result};
use crate::numkit::{eig_sym_real, ComplexMat, ComplexVec, RealMat};
use crate::seqdesign::SystemConfig;
use num_complex::Complex64;

/// Stacked matrix, covariances and the dominant real subspace.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    /// Q x (Nr * P) stacked observation.
    pub stacked: ComplexMat,
    /// Hermitian sample covariance `Y Y^H / (Nr P)`.
    pub covariance: ComplexMat,
    /// Real transformed covariance `Re(L^H R L)`.
    pub real_covariance: RealMat,
    /// Top-Nt orthonormal eigenvectors of the real covariance (columns).
    pub signal_basis: RealMat,
    /// All Q eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

/// Stack the corrected observation, estimate the covariance, transform it to
/// a real matrix and take the dominant Nt-dimensional subspace.
pub fn stack_and_covariance(
    corrected: &[ComplexVec],
    cfg: &SystemConfig,
    tm: &TransformMatrices,
) -> Result<SubspaceDecomposition> {
    let q = cfg.repetitions;
    let p = cfg.block_len;
    let nr = cfg.rx_antennas;
    if corrected.len() != nr || corrected.iter().any(|v| v.len() != q * p) {
        return Err(Error::Dimension(
            "corrected observation does not match the config dimensions".into(),
        ));
    }
    if nr * p <= q {
        return Err(Error::Config(format!(
            "C4 violated: Nr*P = {} must exceed Q = {q}",
            nr * p
        )));
    }
    if tm.q() != q {
        return Err(Error::Dimension(
            "transform matrices built for a different Q".into(),
        ));
    }

    let cols = nr * p;
    let stacked = ComplexMat::from_fn(q, cols, |row, col| {
        let (nu, s) = (col / p, col % p);
        corrected[nu][row * p + s]
    });

    let mut covariance = ComplexMat::zeros(q, q);
    let scale = 1.0 / cols as f64;
    for a in 0..q {
        for b in a..q {
            let mut acc = Complex64::new(0.0, 0.0);
            let (ra, rb) = (stacked.row(a), stacked.row(b));
            for k in 0..cols {
                acc += ra[k] * rb[k].conj();
            }
            acc *= scale;
            covariance.set(a, b, acc);
            covariance.set(b, a, acc.conj());
        }
    }

    let transformed = tm.l_mat.hermitian().mul(&covariance).mul(&tm.l_mat);
    let real_covariance = RealMat::from_fn(q, q, |r, c| transformed.at(r, c).re);

    let (eigenvalues, vectors) = eig_sym_real(&real_covariance)?;
    let nt = cfg.tx_antennas;
    let signal_basis = RealMat::from_fn(q, nt, |r, c| vectors.at(r, c));

    Ok(SubspaceDecomposition {
        stacked,
        covariance,
        real_covariance,
        signal_basis,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::transform::build_transform_matrices;
    use crate::rng::substream;
    use crate::seqdesign::test_configs::small_config;
    use crate::seqdesign::{make_training_set, TrainingVariant};
    use crate::sigmodel::{gen_channel, transmit, uniform_power_delay_profile};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn noiseless_frame(cfo: f64, tag: u64) -> (SystemConfig, Vec<ComplexVec>) {
        let cfg = small_config();
        let mut rng = substream(6, "pilots", &[tag]);
        let ts = make_training_set(&cfg, TrainingVariant::Ts0, &mut rng).unwrap();
        let profile = uniform_power_delay_profile(cfg.channel_taps);
        let mut ch_rng = substream(6, "channel", &[tag]);
        let ch = gen_channel(&cfg, &profile, &mut ch_rng).unwrap();
        let frame = transmit(&cfg, &ts, &ch, cfo, 0.0, &mut rng).unwrap();
        (cfg, frame.samples)
    }

    #[test]
    fn noiseless_covariance_has_rank_nt() {
        let (cfg, samples) = noiseless_frame(0.3, 0);
        let tm = build_transform_matrices(cfg.repetitions).unwrap();
        let dec = stack_and_covariance(&samples, &cfg, &tm).unwrap();
        let lead = dec.eigenvalues[0];
        for &lam in &dec.eigenvalues[cfg.tx_antennas..] {
            assert!(lam.abs() < 1e-9 * lead, "noise eigenvalue {lam} vs {lead}");
        }
        for w in dec.eigenvalues.windows(2) {
            assert!(w[0] >= w[1] - 1e-12 * lead.abs());
        }
    }

    #[test]
    fn forward_backward_identity_holds() {
        // Re(L^H R L) equals (1/2) L^H (R + J R* J) L for any Hermitian R.
        let (cfg, samples) = noiseless_frame(-1.2, 1);
        let tm = build_transform_matrices(cfg.repetitions).unwrap();
        let dec = stack_and_covariance(&samples, &cfg, &tm).unwrap();
        let r = &dec.covariance;
        assert!(r.hermitian_defect() < 1e-12 * r.max_abs());

        let fb = r.add(&r.exchange_conj()).scaled(0.5);
        let lh = tm.l_mat.hermitian();
        let alt = lh.mul(&fb).mul(&tm.l_mat);
        for a in 0..cfg.repetitions {
            for b in 0..cfg.repetitions {
                assert!(
                    (alt.at(a, b).re - dec.real_covariance.at(a, b)).abs()
                        < 1e-12 * r.max_abs().max(1.0)
                );
                assert!(alt.at(a, b).im.abs() < 1e-12 * r.max_abs().max(1.0));
            }
        }
        assert!(dec.real_covariance.symmetric_defect() < 1e-12 * r.max_abs());
    }

    #[test]
    fn signal_basis_is_orthonormal() {
        let (cfg, samples) = noiseless_frame(2.7, 2);
        let tm = build_transform_matrices(cfg.repetitions).unwrap();
        let dec = stack_and_covariance(&samples, &cfg, &tm).unwrap();
        let e = &dec.signal_basis;
        for i in 0..cfg.tx_antennas {
            for j in 0..cfg.tx_antennas {
                let dot: f64 = (0..cfg.repetitions).map(|k| e.at(k, i) * e.at(k, j)).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pure_noise_eigenvalues_cluster_at_noise_floor() {
        // The 3x spread bound is stated at Nr*P = 128 snapshots.
        let cfg = crate::seqdesign::test_configs::paper_config();
        let tm = build_transform_matrices(cfg.repetitions).unwrap();
        let sigma2 = 0.25;
        let mut pass = 0;
        let trials = 20;
        for t in 0..trials {
            let mut rng = substream(6, "noise", &[t]);
            let samples: Vec<ComplexVec> = (0..cfg.rx_antennas)
                .map(|_| {
                    (0..cfg.subcarriers)
                        .map(|_| {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            Complex64::new(re, im) * (sigma2 / 2.0f64).sqrt()
                        })
                        .collect()
                })
                .collect();
            let dec = stack_and_covariance(&samples, &cfg, &tm).unwrap();
            let lmax = dec.eigenvalues[0];
            let lmin = *dec.eigenvalues.last().unwrap();
            if lmax <= 3.0 * sigma2 && lmin >= sigma2 / 3.0 {
                pass += 1;
            }
        }
        assert!(
            pass >= 19,
            "only {pass}/{trials} trials within spread bound"
        );
    }

    #[test]
    fn c4_violation_is_rejected() {
        let cfg = small_config();
        let tm = build_transform_matrices(cfg.repetitions).unwrap();
        let mut bad = cfg.clone();
        bad.rx_antennas = 1;
        bad.block_len = 8;
        bad.subcarriers = 128;
        // 1 * 8 <= 16: C4 fails before any dimension checks can pass.
        let samples = vec![vec![Complex64::new(0.0, 0.0); 128]; 1];
        assert!(stack_and_covariance(&samples, &bad, &tm).is_err());
        let mut rng = substream(6, "noise", &[99]);
        let _ = &mut rng;
        let good = vec![vec![Complex64::new(1.0, 0.0); cfg.subcarriers]; cfg.rx_antennas];
        assert!(stack_and_covariance(&good, &cfg, &tm).is_ok());
    }
}

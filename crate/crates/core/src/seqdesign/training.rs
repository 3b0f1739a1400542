//! Chu base sequences and the three training-set constructions.
//!
//! TS0 staggers one Chu sequence across antennas by cyclic shifts of
//! M = floor(P/N_I) samples, TS1 reuses the same Chu sequence on every
//! antenna, and RS draws the pilots as white complex Gaussians. All variants
//! place antenna mu's pilots on the subcarrier comb `i_mu + p*Q`, which keeps
//! the training sequences orthogonal in the frequency domain.

use super::config::SystemConfig;
use crate::error::{Error, Result};
use crate::numkit::{fft, ifft, ComplexVec};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Training-sequence family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
pub enum TrainingVariant {
    #[serde(rename = "TS0")]
    Ts0,
    #[serde(rename = "TS1")]
    Ts1,
    #[serde(rename = "RS")]
    Rs,
}

impl fmt::Display for TrainingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainingVariant::Ts0 => "TS0",
            TrainingVariant::Ts1 => "TS1",
            TrainingVariant::Rs => "RS",
        })
    }
}

impl FromStr for TrainingVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TS0" => Ok(TrainingVariant::Ts0),
            "TS1" => Ok(TrainingVariant::Ts1),
            "RS" => Ok(TrainingVariant::Rs),
            other => Err(Error::Config(format!("unknown training variant '{other}'"))),
        }
    }
}

/// Frequency-domain base sequences, their time blocks and the mapped frames.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub variant: TrainingVariant,
    /// s~_mu: length-P frequency-domain base sequence per antenna.
    pub base_sequences: Vec<ComplexVec>,
    /// s_mu = (1/sqrt(Q)) F_P^H s~_mu: length-P time block per antenna.
    pub time_blocks: Vec<ComplexVec>,
    /// t~_mu: length-N frequency symbol, nonzero only on the antenna's comb.
    pub freq_symbols: Vec<ComplexVec>,
    /// CP-prefixed time-domain frames of length N_g + N.
    pub time_frames: Vec<ComplexVec>,
}

/// Length-P Chu sequence `s[p] = exp(j*pi*v*p^2/P)`.
///
/// The phase index `v*p^2` is reduced modulo 2P in exact integer arithmetic
/// before the trig evaluation, so long sequences lose no precision.
pub fn chu_sequence(block_len: usize, chu_root: u64) -> Result<ComplexVec> {
    if block_len == 0 || block_len % 2 != 0 {
        return Err(Error::Config(format!(
            "Chu sequence length P = {block_len} must be even"
        )));
    }
    let mut a = chu_root;
    let mut b = block_len as u64;
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    if a != 1 {
        return Err(Error::Config(format!(
            "Chu parameter v = {chu_root} is not coprime to P = {block_len}"
        )));
    }
    let p = block_len as u64;
    Ok((0..p)
        .map(|k| {
            let idx = (chu_root % (2 * p)) * ((k * k) % (2 * p)) % (2 * p);
            Complex64::from_polar(1.0, PI * idx as f64 / p as f64)
        })
        .collect())
}

fn cyclic_down_shift(x: &[Complex64], shift: usize) -> ComplexVec {
    let n = x.len();
    (0..n).map(|p| x[(p + n - shift % n) % n]).collect()
}

/// Map base sequences onto the full-band frequency symbols t~_mu.
fn comb_map(cfg: &SystemConfig, base: &[ComplexVec]) -> Vec<ComplexVec> {
    base.iter()
        .enumerate()
        .map(|(mu, s)| {
            let mut sym = vec![Complex64::new(0.0, 0.0); cfg.subcarriers];
            for (p, &v) in s.iter().enumerate() {
                sym[cfg.pilot_offsets[mu] + p * cfg.repetitions] = v;
            }
            sym
        })
        .collect()
}

/// Per-antenna CP-prefixed time frames: `sqrt(N) * F_N^H t~_mu` with the last
/// N_g samples prepended.
pub fn map_to_frame(ts: &TrainingSet, cfg: &SystemConfig) -> Result<Vec<ComplexVec>> {
    ts.freq_symbols
        .iter()
        .map(|sym| {
            if sym.len() != cfg.subcarriers {
                return Err(Error::Dimension(format!(
                    "frequency symbol length {} does not match N = {}",
                    sym.len(),
                    cfg.subcarriers
                )));
            }
            let scale = (cfg.subcarriers as f64).sqrt();
            let body: ComplexVec = ifft(sym)?.into_iter().map(|v| v * scale).collect();
            let mut frame = Vec::with_capacity(cfg.cp_len + cfg.subcarriers);
            frame.extend_from_slice(&body[cfg.subcarriers - cfg.cp_len..]);
            frame.extend_from_slice(&body);
            Ok(frame)
        })
        .collect()
}

/// Build a complete training set for the given variant.
///
/// RS pilots are i.i.d. standard complex Gaussians rescaled per antenna to
/// the exact C2 energy N/N_t; an exact-zero draw is redrawn.
pub fn make_training_set(
    cfg: &SystemConfig,
    variant: TrainingVariant,
    rng: &mut impl Rng,
) -> Result<TrainingSet> {
    let p = cfg.block_len;
    let q = cfg.repetitions as f64;
    let nt = cfg.tx_antennas as f64;
    let amp = (q / nt).sqrt();

    let base_sequences: Vec<ComplexVec> = match variant {
        TrainingVariant::Ts0 => {
            let chu = chu_sequence(p, cfg.chu_root)?;
            let step = cfg.shift_step();
            (0..cfg.tx_antennas)
                .map(|mu| {
                    let shifted = cyclic_down_shift(&chu, mu * step);
                    Ok(fft(&shifted)?.into_iter().map(|v| v * amp).collect())
                })
                .collect::<Result<_>>()?
        }
        TrainingVariant::Ts1 => {
            let chu = chu_sequence(p, cfg.chu_root)?;
            let tone: ComplexVec = fft(&chu)?.into_iter().map(|v| v * amp).collect();
            vec![tone; cfg.tx_antennas]
        }
        TrainingVariant::Rs => {
            use rand_distr::StandardNormal;
            let target = cfg.subcarriers as f64 / nt;
            (0..cfg.tx_antennas)
                .map(|_| {
                    let mut s: ComplexVec = (0..p)
                        .map(|_| loop {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            if re != 0.0 || im != 0.0 {
                                break Complex64::new(re, im) / 2.0f64.sqrt();
                            }
                        })
                        .collect();
                    let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
                    let scale = (target / energy).sqrt();
                    for v in &mut s {
                        *v *= scale;
                    }
                    s
                })
                .collect()
        }
    };

    let time_blocks: Vec<ComplexVec> = base_sequences
        .iter()
        .map(|s| {
            let inv = ifft(s)?;
            Ok(inv.into_iter().map(|v| v / q.sqrt()).collect())
        })
        .collect::<Result<_>>()?;

    let freq_symbols = comb_map(cfg, &base_sequences);
    let mut ts = TrainingSet {
        variant,
        base_sequences,
        time_blocks,
        freq_symbols,
        time_frames: Vec::new(),
    };
    ts.time_frames = map_to_frame(&ts, cfg)?;
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::seqdesign::test_configs::paper_config;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn chu_p4_matches_direct_evaluation() {
        let s = chu_sequence(4, 1).unwrap();
        let expected = [
            Complex64::new(1.0, 0.0),
            Complex64::new(SQRT_HALF, SQRT_HALF),
            Complex64::new(-1.0, 0.0),
            Complex64::new(SQRT_HALF, SQRT_HALF),
        ];
        for (a, b) in s.iter().zip(expected) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn chu_is_unit_modulus() {
        for (p, v) in [(4usize, 1u64), (64, 1), (64, 63), (128, 5)] {
            for s in chu_sequence(p, v).unwrap() {
                assert!((s.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chu_zero_autocorrelation() {
        let s = chu_sequence(64, 1).unwrap();
        for lag in 1..64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..64 {
                acc += s[p] * s[(p + lag) % 64].conj();
            }
            assert!(acc.norm() < 1e-10, "lag {lag}: {}", acc.norm());
        }
    }

    #[test]
    fn chu_rejects_bad_parameters() {
        assert!(matches!(chu_sequence(5, 1), Err(Error::Config(_))));
        assert!(matches!(chu_sequence(64, 4), Err(Error::Config(_))));
    }

    #[test]
    fn ts1_uses_identical_bases() {
        let cfg = paper_config();
        let mut rng = substream(0, "pilots", &[0]);
        let ts = make_training_set(&cfg, TrainingVariant::Ts1, &mut rng).unwrap();
        for mu in 1..cfg.tx_antennas {
            for (a, b) in ts.base_sequences[0].iter().zip(&ts.base_sequences[mu]) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn ts0_time_blocks_are_shifted_chu() {
        // P = 64, Nt = 3, N_I = 3 gives M = 21; the unitary DFT pair cancels
        // and antenna mu's time block is the Chu sequence shifted down by
        // 21*mu, scaled by 1/sqrt(Nt).
        let cfg = paper_config();
        assert_eq!(cfg.shift_step(), 21);
        let mut rng = substream(0, "pilots", &[0]);
        let ts = make_training_set(&cfg, TrainingVariant::Ts0, &mut rng).unwrap();
        let chu = chu_sequence(64, 1).unwrap();
        let scale = 1.0 / 3.0f64.sqrt();
        for mu in 0..3 {
            for p in 0..64 {
                let expect = chu[(p + 64 - (21 * mu) % 64) % 64] * scale;
                assert!((ts.time_blocks[mu][p] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn all_variants_satisfy_c2_energy() {
        let cfg = paper_config();
        let target = cfg.subcarriers as f64 / cfg.tx_antennas as f64;
        for variant in [
            TrainingVariant::Ts0,
            TrainingVariant::Ts1,
            TrainingVariant::Rs,
        ] {
            let mut rng = substream(1, "pilots", &[7]);
            let ts = make_training_set(&cfg, variant, &mut rng).unwrap();
            for s in &ts.base_sequences {
                let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
                assert!(
                    (energy - target).abs() < 1e-9 * target,
                    "{variant}: energy {energy} vs {target}"
                );
                assert!(s.iter().all(|v| v.norm() > 0.0));
            }
        }
    }

    #[test]
    fn comb_supports_are_disjoint() {
        let cfg = paper_config();
        let mut rng = substream(1, "pilots", &[3]);
        let ts = make_training_set(&cfg, TrainingVariant::Rs, &mut rng).unwrap();
        let mut seen = vec![false; cfg.subcarriers];
        for sym in &ts.freq_symbols {
            for (bin, v) in sym.iter().enumerate() {
                if v.norm() > 0.0 {
                    assert!(!seen[bin], "bin {bin} used twice");
                    seen[bin] = true;
                    assert_eq!(
                        bin % cfg.repetitions % cfg.repetitions,
                        bin % cfg.repetitions
                    );
                }
            }
        }
        assert_eq!(
            seen.iter().filter(|&&b| b).count(),
            cfg.tx_antennas * cfg.block_len
        );
    }

    #[test]
    fn frame_has_cp_and_periodic_ramped_body() {
        let cfg = paper_config();
        let mut rng = substream(1, "pilots", &[4]);
        let ts = make_training_set(&cfg, TrainingVariant::Ts0, &mut rng).unwrap();
        let n = cfg.subcarriers;
        for (mu, frame) in ts.time_frames.iter().enumerate() {
            assert_eq!(frame.len(), cfg.cp_len + n);
            // CP equals the body tail.
            for k in 0..cfg.cp_len {
                assert!((frame[k] - frame[n + k]).norm() < 1e-12);
            }
            // body[n] = exp(j*2*pi*i_mu*n/N) * sqrt(N) * s_mu[n mod P]
            let body = &frame[cfg.cp_len..];
            let scale = (n as f64).sqrt();
            for (t, &v) in body.iter().enumerate() {
                let ramp = Complex64::from_polar(
                    1.0,
                    2.0 * PI * cfg.pilot_offsets[mu] as f64 * t as f64 / n as f64,
                );
                let expect = ramp * ts.time_blocks[mu][t % cfg.block_len] * scale;
                assert!((v - expect).norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn ts0_frames_have_constant_modulus() {
        let cfg = paper_config();
        let mut rng = substream(1, "pilots", &[5]);
        let ts = make_training_set(&cfg, TrainingVariant::Ts0, &mut rng).unwrap();
        for frame in &ts.time_frames {
            let first = frame[0].norm();
            for v in frame {
                assert!((v.norm() - first).abs() < 1e-9 * first);
            }
        }
    }
}

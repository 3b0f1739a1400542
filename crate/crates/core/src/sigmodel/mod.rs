//! Received-signal synthesis: frequency-selective Rayleigh channels, CFO
//! rotation (including the CP phase accumulated before the retained symbol)
//! and AWGN. All vectors live in the post-CP-removal domain of length N.

mod framefile;

pub use framefile::{read_frame_json, read_frame_path, write_frame_binary, write_frame_json};

use crate::error::{Error, Result};
use crate::numkit::{ifft, ComplexVec};
use crate::seqdesign::{SystemConfig, TrainingSet};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Relative tap powers of the reference channel profile, in dB.
const PROFILE_POWERS_DB: [f64; 4] = [0.0, -9.7, -19.2, -22.8];
/// Tap delays of the reference profile in microseconds.
const PROFILE_DELAYS_US: [f64; 4] = [0.0, 0.1, 0.2, 0.4];
/// Sample rate implied by the 20 MHz system bandwidth.
const SAMPLE_RATE_HZ: f64 = 20e6;

/// Impulse responses for every transmit/receive antenna pair plus the
/// power-delay profile they were drawn from.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    taps: Vec<Complex64>,
    rx_antennas: usize,
    tx_antennas: usize,
    taps_per_link: usize,
    /// Average power per tap, linear scale, sums to one.
    pub profile: Vec<f64>,
}

impl ChannelSet {
    /// Impulse response h^(nu, mu).
    pub fn link(&self, rx: usize, tx: usize) -> &[Complex64] {
        let base = (rx * self.tx_antennas + tx) * self.taps_per_link;
        &self.taps[base..base + self.taps_per_link]
    }

    pub fn rx_antennas(&self) -> usize {
        self.rx_antennas
    }

    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }

    pub fn taps_per_link(&self) -> usize {
        self.taps_per_link
    }

    /// Build from explicit per-link impulse responses (row-major rx, tx).
    pub fn from_links(
        links: Vec<ComplexVec>,
        rx_antennas: usize,
        tx_antennas: usize,
        profile: Vec<f64>,
    ) -> Result<Self> {
        if links.len() != rx_antennas * tx_antennas {
            return Err(Error::Dimension(format!(
                "need {} links, got {}",
                rx_antennas * tx_antennas,
                links.len()
            )));
        }
        let taps_per_link = links.first().map_or(0, |l| l.len());
        if links.iter().any(|l| l.len() != taps_per_link) {
            return Err(Error::Dimension("ragged channel links".into()));
        }
        if links
            .iter()
            .any(|l| l.iter().all(|t| t.re == 0.0 && t.im == 0.0))
        {
            return Err(Error::Degenerate("all-zero channel link".into()));
        }
        Ok(Self {
            taps: links.into_iter().flatten().collect(),
            rx_antennas,
            tx_antennas,
            taps_per_link,
            profile,
        })
    }
}

/// The reference power-delay profile: taps at delays {0, 0.1, 0.2, 0.4} us
/// with relative powers {0, -9.7, -19.2, -22.8} dB, sampled at 20 MHz. The
/// delays land on sample indices {0, 2, 4, 8}; intermediate taps are exactly
/// zero and the total power is normalized to one.
pub fn default_power_delay_profile(channel_taps: usize) -> Result<Vec<f64>> {
    let mut profile = vec![0.0; channel_taps];
    let mut total = 0.0;
    for (db, us) in PROFILE_POWERS_DB.iter().zip(PROFILE_DELAYS_US) {
        let idx = (us * 1e-6 * SAMPLE_RATE_HZ).round() as usize;
        if idx >= channel_taps {
            return Err(Error::Config(format!(
                "profile needs at least {} taps, got {channel_taps}",
                idx + 1
            )));
        }
        let lin = 10f64.powf(db / 10.0);
        profile[idx] += lin;
        total += lin;
    }
    for v in &mut profile {
        *v /= total;
    }
    Ok(profile)
}

/// Flat profile with all energy in `channel_taps` equal taps.
pub fn uniform_power_delay_profile(channel_taps: usize) -> Vec<f64> {
    vec![1.0 / channel_taps as f64; channel_taps]
}

/// Draw an independent Rayleigh channel for every antenna pair.
///
/// Each active tap is circular complex Gaussian with variance equal to its
/// profile entry; zero-profile taps stay exactly zero. The rare all-zero
/// draw is rejected and redrawn.
pub fn gen_channel(cfg: &SystemConfig, profile: &[f64], rng: &mut impl Rng) -> Result<ChannelSet> {
    if profile.len() != cfg.channel_taps {
        return Err(Error::Dimension(format!(
            "profile length {} does not match L = {}",
            profile.len(),
            cfg.channel_taps
        )));
    }
    let sum: f64 = profile.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "power-delay profile must sum to 1, got {sum}"
        )));
    }
    let mut links = Vec::with_capacity(cfg.rx_antennas * cfg.tx_antennas);
    for _ in 0..cfg.rx_antennas * cfg.tx_antennas {
        let link: ComplexVec = loop {
            let candidate: ComplexVec = profile
                .iter()
                .map(|&pw| {
                    if pw == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let sigma = (pw / 2.0).sqrt();
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re * sigma, im * sigma)
                    }
                })
                .collect();
            if candidate.iter().any(|t| t.re != 0.0 || t.im != 0.0) {
                break candidate;
            }
        };
        links.push(link);
    }
    ChannelSet::from_links(links, cfg.rx_antennas, cfg.tx_antennas, profile.to_vec())
}

/// Per-receive-antenna complex baseband observation after CP removal.
#[derive(Debug, Clone)]
pub struct ReceivedFrame {
    /// y_nu, length N each.
    pub samples: Vec<ComplexVec>,
    /// Ground-truth CFO when the frame came from the synthesizer.
    pub true_cfo: Option<f64>,
    /// Noise variance per complex sample.
    pub noise_var: f64,
    /// SNR in dB when known.
    pub snr_db: Option<f64>,
}

/// Noise variance for a target SNR under this library's conventions.
///
/// With unit-average-energy channels and the C2 training energy, the average
/// received signal power per complex sample per receive antenna is exactly 1,
/// so `sigma_w^2 = 10^(-snr_db/10)`. A unit test verifies the normalization
/// empirically.
pub fn snr_to_noise_var(_cfg: &SystemConfig, _ts: &TrainingSet, snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Channel frequency response at one subcarrier: unitary-DFT convention.
fn freq_response(taps: &[Complex64], bin: usize, n: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, h) in taps.iter().enumerate() {
        acc += h * Complex64::from_polar(1.0, -2.0 * PI * (bin * l % n) as f64 / n as f64);
    }
    acc / (n as f64).sqrt()
}

/// Noiseless synthesis with an arbitrary rotation, without the identifiable
/// range check. The identifiability scan sweeps rotations over the full
/// (-Q, Q) interval; estimation paths should go through [`transmit`].
pub fn synth_rotated(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    ch: &ChannelSet,
    rotation: f64,
) -> Result<Vec<ComplexVec>> {
    if ch.rx_antennas() != cfg.rx_antennas
        || ch.tx_antennas() != cfg.tx_antennas
        || ch.taps_per_link() != cfg.channel_taps
    {
        return Err(Error::Dimension("channel set does not match config".into()));
    }
    if ts.freq_symbols.len() != cfg.tx_antennas {
        return Err(Error::Dimension(
            "training set does not match config".into(),
        ));
    }
    let n = cfg.subcarriers;
    let scale = (n as f64).sqrt();
    let mut samples = Vec::with_capacity(cfg.rx_antennas);
    for rx in 0..cfg.rx_antennas {
        let mut freq = vec![Complex64::new(0.0, 0.0); n];
        for (mu, base) in ts.base_sequences.iter().enumerate() {
            let taps = ch.link(rx, mu);
            for (p, &pilot) in base.iter().enumerate() {
                let bin = cfg.pilot_offsets[mu] + p * cfg.repetitions;
                freq[bin] = freq_response(taps, bin, n) * pilot;
            }
        }
        let mut time: ComplexVec = ifft(&freq)?.into_iter().map(|v| v * scale).collect();
        for (idx, v) in time.iter_mut().enumerate() {
            let phase = 2.0 * PI * rotation * (cfg.cp_len as f64 + idx as f64) / n as f64;
            *v *= Complex64::from_polar(1.0, phase);
        }
        samples.push(time);
    }
    Ok(samples)
}

/// Synthesize the received training observation.
///
/// Implements the pilot-domain product: the frequency symbol of each antenna
/// is multiplied by the link's frequency response on its comb, superposed
/// across antennas, brought to the time domain with `sqrt(N) F_N^H`, rotated
/// by the CFO ramp `e^{j 2 pi eps (N_g + n) / N}`, and dressed with AWGN of
/// variance `noise_var` per complex sample.
pub fn transmit(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    ch: &ChannelSet,
    cfo: f64,
    noise_var: f64,
    rng: &mut impl Rng,
) -> Result<ReceivedFrame> {
    let (lo, hi) = cfg.cfo_range();
    if !(cfo > lo && cfo <= hi) {
        return Err(Error::Config(format!(
            "CFO {cfo} outside the identifiable range ({lo}, {hi}]"
        )));
    }
    let mut samples = synth_rotated(cfg, ts, ch, cfo)?;
    if noise_var > 0.0 {
        let sigma = (noise_var / 2.0).sqrt();
        for antenna in &mut samples {
            for v in antenna.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += Complex64::new(re * sigma, im * sigma);
            }
        }
    }
    Ok(ReceivedFrame {
        samples,
        true_cfo: Some(cfo),
        noise_var,
        snr_db: None,
    })
}

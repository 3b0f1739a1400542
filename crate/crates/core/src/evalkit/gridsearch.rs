//! Brute-force reference estimator: zero-padded FFT interpolation of the
//! pilot-energy metric plus an exhaustive line search over the identifiable
//! range. This is the approach the two-stage estimator replaces; it exists
//! as a correctness/complexity baseline.

use crate::error::{Error, Result};
use crate::numkit::fft;
use crate::seqdesign::SystemConfig;
use crate::sigmodel::ReceivedFrame;
use num_complex::Complex64;

/// Maximize the continuous pilot-energy metric over a uniform grid of
/// `Q * (grid_size / N)` candidates covering the identifiable range, with the
/// spectrum interpolated by a `grid_size`-point zero-padded FFT.
///
/// Returns `(best_cfo, best_metric)`.
pub fn grid_search_cfo(
    frame: &ReceivedFrame,
    cfg: &SystemConfig,
    grid_size: usize,
) -> Result<(f64, f64)> {
    let n = cfg.subcarriers;
    if !grid_size.is_power_of_two() || grid_size < n {
        return Err(Error::Config(format!(
            "grid size {grid_size} must be a power of two at least N = {n}"
        )));
    }
    if frame.samples.len() != cfg.rx_antennas || frame.samples.iter().any(|s| s.len() != n) {
        return Err(Error::Dimension("frame does not match the config".into()));
    }
    let up = grid_size / n;
    let mut energy = vec![0.0f64; grid_size];
    for antenna in &frame.samples {
        let mut padded = vec![Complex64::new(0.0, 0.0); grid_size];
        padded[..n].copy_from_slice(antenna);
        let spec = fft(&padded)?;
        for (e, v) in energy.iter_mut().zip(&spec) {
            *e += v.norm_sqr();
        }
    }

    let bins = cfg.pilot_bins();
    let h = cfg.cfo_half_range();
    let candidates = cfg.repetitions * up;
    let mut best_metric = f64::NEG_INFINITY;
    let mut best_shift = 0i64;
    for m in 0..candidates {
        // shift in upsampled bins: cfo = shift / up, over (-h, Q - h].
        let shift = -h * up as i64 + m as i64 + 1;
        let mut metric = 0.0;
        for &b in &bins {
            let idx = ((b * up) as i64 + shift).rem_euclid(grid_size as i64) as usize;
            metric += energy[idx];
        }
        if metric > best_metric {
            best_metric = metric;
            best_shift = shift;
        }
    }
    Ok((best_shift as f64 / up as f64, best_metric))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::seqdesign::test_configs::small_config;
    use crate::seqdesign::{make_training_set, TrainingVariant};
    use crate::sigmodel::{gen_channel, transmit, uniform_power_delay_profile};

    #[test]
    fn grid_search_locates_the_cfo() {
        let cfg = small_config();
        let mut rng = substream(15, "pilots", &[0]);
        let ts = make_training_set(&cfg, TrainingVariant::Ts0, &mut rng).unwrap();
        let profile = uniform_power_delay_profile(cfg.channel_taps);
        let mut ch_rng = substream(15, "channel", &[0]);
        let ch = gen_channel(&cfg, &profile, &mut ch_rng).unwrap();
        let cfo = -3.271;
        let mut n_rng = substream(15, "noise", &[0]);
        let frame = transmit(&cfg, &ts, &ch, cfo, 0.01, &mut n_rng).unwrap();
        let (est, _) = grid_search_cfo(&frame, &cfg, 1 << 14).unwrap();
        // Resolution is N/grid = 1/64 bins here.
        assert!((est - cfo).abs() < 0.02, "grid estimate {est} vs {cfo}");
    }

    #[test]
    fn small_grids_are_rejected() {
        let cfg = small_config();
        let frame = ReceivedFrame {
            samples: vec![vec![Complex64::new(0.0, 0.0); cfg.subcarriers]; cfg.rx_antennas],
            true_cfo: None,
            noise_var: 0.0,
            snr_db: None,
        };
        assert!(grid_search_cfo(&frame, &cfg, 100).is_err());
        assert!(grid_search_cfo(&frame, &cfg, 128).is_err());
    }
}

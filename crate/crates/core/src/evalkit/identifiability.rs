//! Numerical identifiability witness.
//!
//! For a rotation mismatch Delta, the captured pilot energy P(Delta) of the
//! noiseless observation is compared with the total energy; their difference
//! D(Delta) is nonnegative, vanishes at Delta = 0, and stays strictly
//! positive elsewhere exactly when the pilot placement admits no ambiguous
//! shift. The scan evaluates D on a grid over (-Q, Q) using the same pilot
//! metric machinery as the ICFO stage.

use crate::error::{Error, Result};
use crate::numkit::fft;
use crate::seqdesign::{SystemConfig, TrainingSet};
use crate::sigmodel::{synth_rotated, ChannelSet};

/// Grid scan of the alignment-energy deficit D(Delta).
#[derive(Debug, Clone)]
pub struct IdentifiabilityReport {
    pub grid: Vec<f64>,
    pub d_values: Vec<f64>,
    /// Total noiseless energy, the natural scale for D.
    pub baseline: f64,
    /// Minimum of D over grid points with |Delta| >= the exclusion radius.
    pub min_away_from_zero: f64,
    /// Grid point attaining that minimum.
    pub argmin: f64,
    /// True when the minimum is strictly positive beyond roundoff.
    pub pass: bool,
}

/// Exclusion radius around Delta = 0: D is continuous with D(0) = 0, so the
/// witness only asserts positivity away from the true alignment.
pub const EXCLUSION_RADIUS: f64 = 0.25;
const ROUNDOFF_REL: f64 = 1e-9;

/// Scan D(Delta) over (-Q, Q) with the given step (at most 0.1).
pub fn identifiability_scan(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    ch: &ChannelSet,
    grid_step: f64,
) -> Result<IdentifiabilityReport> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Config(format!(
            "grid step must be in (0, 0.1], got {grid_step}"
        )));
    }
    let q = cfg.repetitions as f64;
    let bins = cfg.pilot_bins();
    let steps = (q / grid_step).round() as i64;

    let mut grid = Vec::new();
    let mut d_values = Vec::new();
    let mut baseline = 0.0f64;
    for k in (-steps + 1)..steps {
        let delta = k as f64 * grid_step;
        let samples = synth_rotated(cfg, ts, ch, delta)?;
        let mut total = 0.0;
        let mut captured = 0.0;
        for antenna in &samples {
            let spec = fft(antenna)?;
            total += spec.iter().map(|v| v.norm_sqr()).sum::<f64>();
            captured += bins.iter().map(|&b| spec[b].norm_sqr()).sum::<f64>();
        }
        baseline = total;
        grid.push(delta);
        d_values.push(total - captured);
    }

    let mut min_away = f64::INFINITY;
    let mut argmin = 0.0;
    for (&delta, &d) in grid.iter().zip(&d_values) {
        if delta.abs() >= EXCLUSION_RADIUS && d < min_away {
            min_away = d;
            argmin = delta;
        }
    }
    Ok(IdentifiabilityReport {
        grid,
        d_values,
        baseline,
        min_away_from_zero: min_away,
        argmin,
        pass: min_away > ROUNDOFF_REL * baseline,
    })
}

impl IdentifiabilityReport {
    /// D at the grid point closest to the requested Delta.
    pub fn d_at(&self, delta: f64) -> f64 {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (k, &g) in self.grid.iter().enumerate() {
            if (g - delta).abs() < dist {
                dist = (g - delta).abs();
                best = k;
            }
        }
        self.d_values[best]
    }
}

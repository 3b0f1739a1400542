//! Run configuration: the system parameters plus simulation controls, parsed
//! from a single JSON file with unknown keys rejected.
//!
//! Seed precedence: the `CFOLAB_SEED` environment variable overrides the
//! `--seed` flag, which overrides the config file.

use cfolab_core::error::{Error, Result};
use cfolab_core::seqdesign::SystemConfig;
use cfolab_core::sigmodel::{default_power_delay_profile, uniform_power_delay_profile};
use cfolab_core::TrainingVariant;
use serde::Deserialize;
use std::path::Path;

pub const SEED_ENV_VAR: &str = "CFOLAB_SEED";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "Ng")]
    ng: usize,
    #[serde(rename = "P")]
    p: usize,
    #[serde(rename = "Q", default)]
    q: Option<usize>,
    #[serde(rename = "Nt")]
    nt: usize,
    #[serde(rename = "Nr")]
    nr: usize,
    #[serde(rename = "L")]
    l: usize,
    pilot_offsets: Vec<usize>,
    #[serde(rename = "v", default)]
    chu_v: Option<u64>,
    #[serde(rename = "N_I", default)]
    n_i: Option<usize>,
    #[serde(default)]
    eps_th: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    variants: Option<Vec<String>>,
    #[serde(default)]
    snr_grid_db: Option<Vec<f64>>,
    #[serde(default)]
    n_trials: Option<usize>,
    #[serde(default)]
    workers: Option<usize>,
    /// Power-delay profile (linear, sums to 1); defaults to the reference
    /// profile when L allows it, otherwise uniform.
    #[serde(default)]
    profile: Option<Vec<f64>>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub variants: Vec<TrainingVariant>,
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    pub workers: usize,
    pub profile: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path, seed_flag: Option<u64>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let file: RunConfigFile = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if file.p == 0 || file.n % file.p != 0 {
            return Err(Error::Config(format!(
                "P = {} must divide N = {}",
                file.p, file.n
            )));
        }
        let derived_q = file.n / file.p;
        if let Some(q) = file.q {
            if q != derived_q {
                return Err(Error::Config(format!(
                    "inconsistent Q: given {q}, but N/P = {derived_q}"
                )));
            }
        }
        let mut seed = file.seed.unwrap_or(0);
        if let Some(flag) = seed_flag {
            seed = flag;
        }
        if let Ok(env) = std::env::var(SEED_ENV_VAR) {
            seed = env
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV_VAR} is not a valid u64: {env}")))?;
        }
        let system = SystemConfig {
            subcarriers: file.n,
            cp_len: file.ng,
            block_len: file.p,
            repetitions: derived_q,
            tx_antennas: file.nt,
            rx_antennas: file.nr,
            channel_taps: file.l,
            pilot_offsets: file.pilot_offsets,
            chu_root: file.chu_v.unwrap_or(1),
            shift_divisor: file.n_i.unwrap_or(file.nt),
            window_radius: file.eps_th.unwrap_or(0.75),
            seed,
        }
        .validated()?;

        let variants = match file.variants {
            Some(names) => names
                .iter()
                .map(|s| s.parse())
                .collect::<Result<Vec<TrainingVariant>>>()?,
            None => vec![
                TrainingVariant::Ts0,
                TrainingVariant::Ts1,
                TrainingVariant::Rs,
            ],
        };
        if variants.is_empty() {
            return Err(Error::Config("variants list is empty".into()));
        }
        let snr_grid_db = file
            .snr_grid_db
            .unwrap_or_else(|| vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        if snr_grid_db.is_empty() || snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "snr_grid_db must be nonempty and strictly increasing".into(),
            ));
        }
        let n_trials = file.n_trials.unwrap_or(500);
        if n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        let profile = match file.profile {
            Some(p) => {
                if p.len() != system.channel_taps {
                    return Err(Error::Config(format!(
                        "profile length {} does not match L = {}",
                        p.len(),
                        system.channel_taps
                    )));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("profile sums to {sum}, expected 1")));
                }
                p
            }
            None => default_power_delay_profile(system.channel_taps)
                .unwrap_or_else(|_| uniform_power_delay_profile(system.channel_taps)),
        };
        Ok(RunConfig {
            system,
            variants,
            snr_grid_db,
            n_trials,
            workers: file.workers.unwrap_or(1).max(1),
            profile,
        })
    }
}

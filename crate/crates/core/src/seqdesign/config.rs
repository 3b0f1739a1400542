//! System configuration and the design-condition validation report.
//!
//! Structural requirements (power-of-two sizes, consistent dimensions,
//! ordered pilot offsets) are enforced at construction. The behavioural
//! design conditions C0..C4 are evaluated into a [`ValidationReport`] so that
//! deliberately broken designs can still be synthesized and studied; callers
//! that estimate should refuse configs whose report fails.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// All scalar parameters of the system and the training design.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// N: number of subcarriers (power of two).
    pub subcarriers: usize,
    /// N_g: cyclic prefix length in samples.
    pub cp_len: usize,
    /// P: pilots per antenna / time-block length (power of two, even).
    pub block_len: usize,
    /// Q = N / P: block repetitions per OFDM symbol.
    pub repetitions: usize,
    /// N_t: transmit antennas.
    pub tx_antennas: usize,
    /// N_r: receive antennas.
    pub rx_antennas: usize,
    /// L: channel impulse-response length in taps.
    pub channel_taps: usize,
    /// i_mu: per-antenna pilot comb offsets, strictly increasing in [0, Q).
    pub pilot_offsets: Vec<usize>,
    /// v: Chu sequence parameter, coprime to P.
    pub chu_root: u64,
    /// N_I: shift divisor for the staggered Chu construction (M = floor(P/N_I)).
    pub shift_divisor: usize,
    /// eps_th: FCFO window radius, in (0.5, 1).
    pub window_radius: f64,
    /// Master seed for every random draw tied to this config.
    pub seed: u64,
}

/// One line of the validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    /// Whether estimation commands must refuse configs failing this check.
    pub required: bool,
}

/// Pass/fail outcome for each structural and design condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    /// Failures of conditions that estimation paths must not ignore.
    pub fn required_failures(&self) -> Vec<&ConditionCheck> {
        self.checks
            .iter()
            .filter(|c| !c.pass && c.required)
            .collect()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("[{tag}] {:<22} {}\n", c.name, c.detail));
        }
        out
    }
}

impl SystemConfig {
    /// Validate the structural invariants that every other module relies on.
    ///
    /// The uniqueness condition C3 part 3 is deliberately *not* enforced here;
    /// it is reported by [`validate_conditions`] so that counterexample
    /// designs remain constructible.
    pub fn validated(self) -> Result<Self> {
        let c = &self;
        let fail = |msg: String| Err(Error::Config(msg));
        if !c.subcarriers.is_power_of_two() {
            return fail(format!("N = {} is not a power of two", c.subcarriers));
        }
        if !c.block_len.is_power_of_two() {
            return fail(format!("P = {} is not a power of two", c.block_len));
        }
        if c.block_len % 2 != 0 {
            return fail(format!(
                "P = {} must be even for the Chu construction",
                c.block_len
            ));
        }
        if c.repetitions * c.block_len != c.subcarriers {
            return fail(format!(
                "N = P*Q violated: {} != {} * {}",
                c.subcarriers, c.block_len, c.repetitions
            ));
        }
        if c.repetitions < 2 {
            return fail(format!("Q = {} must be at least 2", c.repetitions));
        }
        if c.tx_antennas == 0 || c.rx_antennas == 0 {
            return fail("antenna counts must be positive".into());
        }
        if c.pilot_offsets.len() != c.tx_antennas {
            return fail(format!(
                "need {} pilot offsets, got {}",
                c.tx_antennas,
                c.pilot_offsets.len()
            ));
        }
        for w in c.pilot_offsets.windows(2) {
            if w[0] >= w[1] {
                return fail(format!(
                    "C0 violated: pilot offsets must be strictly increasing, got {:?}",
                    c.pilot_offsets
                ));
            }
        }
        if let Some(&last) = c.pilot_offsets.last() {
            if last >= c.repetitions {
                return fail(format!(
                    "C0 violated: pilot offset {} is not below Q = {}",
                    last, c.repetitions
                ));
            }
        }
        if c.channel_taps == 0 {
            return fail("channel length L must be positive".into());
        }
        if c.cp_len + 1 < c.channel_taps {
            return fail(format!(
                "CP too short: N_g = {} < L - 1 = {}",
                c.cp_len,
                c.channel_taps - 1
            ));
        }
        if gcd(c.chu_root, c.block_len as u64) != 1 {
            return fail(format!(
                "Chu parameter v = {} is not coprime to P = {}",
                c.chu_root, c.block_len
            ));
        }
        if c.shift_divisor < c.tx_antennas {
            return fail(format!(
                "shift divisor N_I = {} must be at least N_t = {}",
                c.shift_divisor, c.tx_antennas
            ));
        }
        if c.shift_divisor > c.block_len {
            return fail(format!(
                "shift divisor N_I = {} exceeds P = {}",
                c.shift_divisor, c.block_len
            ));
        }
        if !(c.window_radius > 0.5 && c.window_radius < 1.0) {
            return fail(format!(
                "window radius eps_th = {} outside (0.5, 1)",
                c.window_radius
            ));
        }
        Ok(self)
    }

    /// Half-range of the identifiable CFO interval: floor(Q/2).
    pub fn cfo_half_range(&self) -> i64 {
        (self.repetitions / 2) as i64
    }

    /// The identifiable CFO interval `(-floor(Q/2), Q - floor(Q/2)]`.
    pub fn cfo_range(&self) -> (f64, f64) {
        let h = self.cfo_half_range() as f64;
        (-h, self.repetitions as f64 - h)
    }

    /// Subcarrier indices carrying pilots, over all antennas, ascending.
    pub fn pilot_bins(&self) -> Vec<usize> {
        let mut bins = Vec::with_capacity(self.tx_antennas * self.block_len);
        for p in 0..self.block_len {
            for &off in &self.pilot_offsets {
                bins.push(off + p * self.repetitions);
            }
        }
        bins.sort_unstable();
        bins
    }

    /// M = floor(P / N_I): the Chu shift step between antennas.
    pub fn shift_step(&self) -> usize {
        self.block_len / self.shift_divisor
    }

    /// Pilot location vector l = sum_mu e_Q^{i_mu} as a boolean mask.
    pub fn pilot_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.repetitions];
        for &off in &self.pilot_offsets {
            mask[off] = true;
        }
        mask
    }

    /// `(1_Q - l)^T l^(q)`: shifted pilots that land on non-pilot slots.
    pub fn shift_correlation(&self, q: usize) -> usize {
        let mask = self.pilot_mask();
        let big_q = self.repetitions;
        self.pilot_offsets
            .iter()
            .filter(|&&off| !mask[(off + q) % big_q])
            .count()
    }

    /// min over nonzero shifts of [`shift_correlation`] (C3 part 3 metric).
    pub fn min_shift_correlation(&self) -> usize {
        (1..self.repetitions)
            .map(|q| self.shift_correlation(q))
            .min()
            .unwrap_or(0)
    }

    /// min over ordered antenna pairs of `(i_mu' - i_mu) mod Q`.
    pub fn min_circular_gap(&self) -> usize {
        let big_q = self.repetitions;
        let mut best = usize::MAX;
        for (a, &ia) in self.pilot_offsets.iter().enumerate() {
            for (b, &ib) in self.pilot_offsets.iter().enumerate() {
                if a != b {
                    best = best.min((ib + big_q - ia) % big_q);
                }
            }
        }
        if best == usize::MAX {
            0
        } else {
            best
        }
    }
}

/// Evaluate design conditions C0..C4 plus the window-disjointness note.
pub fn validate_conditions(cfg: &SystemConfig) -> ValidationReport {
    let mut checks = Vec::new();
    let q = cfg.repetitions;

    let c0 = cfg.pilot_offsets.windows(2).all(|w| w[0] < w[1])
        && cfg.pilot_offsets.iter().all(|&i| i < q)
        && cfg.pilot_offsets.len() == cfg.tx_antennas;
    checks.push(ConditionCheck {
        name: "C0 offset ordering".into(),
        required: true,
        pass: c0,
        detail: format!("pilot offsets {:?} in [0, {q})", cfg.pilot_offsets),
    });

    let c1 = cfg.block_len * cfg.repetitions == cfg.subcarriers;
    checks.push(ConditionCheck {
        name: "C1 comb feasibility".into(),
        required: true,
        pass: c1,
        detail: format!(
            "N = P*Q: {} = {} * {}",
            cfg.subcarriers, cfg.block_len, cfg.repetitions
        ),
    });

    checks.push(ConditionCheck {
        name: "C2 energy split".into(),
        required: true,
        pass: cfg.tx_antennas > 0,
        detail: format!(
            "per-antenna training energy N/N_t = {:.3}",
            cfg.subcarriers as f64 / cfg.tx_antennas as f64
        ),
    });

    let budget = cfg.subcarriers as i64 - (cfg.tx_antennas * cfg.block_len) as i64;
    let c3a = budget >= (cfg.tx_antennas * cfg.block_len) as i64;
    checks.push(ConditionCheck {
        name: "C3 part 1 (N-NtP>=NtP)".into(),
        required: true,
        pass: c3a,
        detail: format!(
            "N - Nt*P = {} vs Nt*P = {}",
            budget,
            cfg.tx_antennas * cfg.block_len
        ),
    });

    let c3b = cfg.block_len >= cfg.channel_taps;
    checks.push(ConditionCheck {
        name: "C3 part 2 (P>=L)".into(),
        required: true,
        pass: c3b,
        detail: format!("P = {} vs L = {}", cfg.block_len, cfg.channel_taps),
    });

    let min_corr = cfg.min_shift_correlation();
    checks.push(ConditionCheck {
        name: "C3 part 3 (shift corr)".into(),
        required: true,
        pass: min_corr > 0,
        detail: format!("min over q of (1-l)^T l^(q) = {min_corr}"),
    });

    let c4 = cfg.rx_antennas * cfg.block_len > cfg.repetitions;
    checks.push(ConditionCheck {
        name: "C4 snapshot count".into(),
        required: true,
        pass: c4,
        detail: format!(
            "Nr*P = {} vs Q = {}",
            cfg.rx_antennas * cfg.block_len,
            cfg.repetitions
        ),
    });

    let gap = cfg.min_circular_gap();
    checks.push(ConditionCheck {
        name: "window disjointness".into(),
        pass: gap as f64 >= 2.0 * cfg.window_radius,
        required: false,
        detail: format!(
            "min circular gap {gap} vs 2*eps_th = {:.2}",
            2.0 * cfg.window_radius
        ),
    });

    ValidationReport { checks }
}

/// Serde view of a system config as it appears in config and frame files.
/// Field names follow the usual symbols; omitted fields take defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfigFile {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Ng")]
    pub ng: usize,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(rename = "Nt")]
    pub nt: usize,
    #[serde(rename = "Nr")]
    pub nr: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub pilot_offsets: Vec<usize>,
    #[serde(rename = "v", default, skip_serializing_if = "Option::is_none")]
    pub chu_v: Option<u64>,
    #[serde(rename = "N_I", default, skip_serializing_if = "Option::is_none")]
    pub n_i: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_th: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SystemConfigFile {
    /// Fill defaults (Q derived from N/P, v = 1, N_I = N_t, eps_th = 0.75,
    /// seed = 0) and validate structurally.
    pub fn into_config(self) -> Result<SystemConfig> {
        if self.p == 0 {
            return Err(Error::Config("P must be positive".into()));
        }
        if self.n % self.p != 0 {
            return Err(Error::Config(format!(
                "P = {} does not divide N = {}",
                self.p, self.n
            )));
        }
        let derived_q = self.n / self.p;
        if let Some(q) = self.q {
            if q != derived_q {
                return Err(Error::Config(format!(
                    "inconsistent Q: given {q}, but N/P = {derived_q}"
                )));
            }
        }
        SystemConfig {
            subcarriers: self.n,
            cp_len: self.ng,
            block_len: self.p,
            repetitions: derived_q,
            tx_antennas: self.nt,
            rx_antennas: self.nr,
            channel_taps: self.l,
            pilot_offsets: self.pilot_offsets,
            chu_root: self.chu_v.unwrap_or(1),
            shift_divisor: self.n_i.unwrap_or(self.nt),
            window_radius: self.eps_th.unwrap_or(0.75),
            seed: self.seed.unwrap_or(0),
        }
        .validated()
    }

    pub fn from_config(cfg: &SystemConfig) -> Self {
        Self {
            n: cfg.subcarriers,
            ng: cfg.cp_len,
            p: cfg.block_len,
            q: Some(cfg.repetitions),
            nt: cfg.tx_antennas,
            nr: cfg.rx_antennas,
            l: cfg.channel_taps,
            pilot_offsets: cfg.pilot_offsets.clone(),
            chu_v: Some(cfg.chu_root),
            n_i: Some(cfg.shift_divisor),
            eps_th: Some(cfg.window_radius),
            seed: Some(cfg.seed),
        }
    }
}

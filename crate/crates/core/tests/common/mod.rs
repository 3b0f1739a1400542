//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles intentionally avoid the library's own computation paths: the
//! FCFO reference roots the complex unit-circle polynomial directly, and the
//! CRB reference evaluates the bound with an explicit dense inverse.

use cfolab_core::estimator::TransformMatrices;
use cfolab_core::numkit::{ComplexMat, ComplexVec, RealMat};
use cfolab_core::rng::substream;
use cfolab_core::seqdesign::{make_training_set, SystemConfig, TrainingSet, TrainingVariant};
use cfolab_core::sigmodel::{
    default_power_delay_profile, gen_channel, synth_rotated, uniform_power_delay_profile,
    ChannelSet, ReceivedFrame,
};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// The published reference setup: N = 1024, P = 64, Q = 16, Nt = 3, Nr = 2.
pub fn paper_config(seed: u64) -> SystemConfig {
    SystemConfig {
        subcarriers: 1024,
        cp_len: 64,
        block_len: 64,
        repetitions: 16,
        tx_antennas: 3,
        rx_antennas: 2,
        channel_taps: 9,
        pilot_offsets: vec![2, 7, 12],
        chu_root: 1,
        shift_divisor: 3,
        window_radius: 0.75,
        seed,
    }
    .validated()
    .unwrap()
}

/// Small exactness config: N = 256, P = 16, Q = 16, Nt = 2, Nr = 2, L = 4.
pub fn small_config(seed: u64) -> SystemConfig {
    SystemConfig {
        subcarriers: 256,
        cp_len: 16,
        block_len: 16,
        repetitions: 16,
        tx_antennas: 2,
        rx_antennas: 2,
        channel_taps: 4,
        pilot_offsets: vec![2, 9],
        chu_root: 1,
        shift_divisor: 2,
        window_radius: 0.75,
        seed,
    }
    .validated()
    .unwrap()
}

pub fn profile_for(cfg: &SystemConfig) -> Vec<f64> {
    default_power_delay_profile(cfg.channel_taps)
        .unwrap_or_else(|_| uniform_power_delay_profile(cfg.channel_taps))
}

/// Synthesize one noisy frame from named sub-streams.
pub fn noisy_frame(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    ch: &ChannelSet,
    cfo: f64,
    noise_var: f64,
    noise_tag: u64,
) -> ReceivedFrame {
    let clean = synth_rotated(cfg, ts, ch, cfo).unwrap();
    let mut rng = substream(cfg.seed, "acc-noise", &[noise_tag]);
    let sigma = (noise_var / 2.0).sqrt();
    let samples: Vec<ComplexVec> = clean
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|v| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    v + Complex64::new(re * sigma, im * sigma)
                })
                .collect()
        })
        .collect();
    ReceivedFrame {
        samples,
        true_cfo: Some(cfo),
        noise_var,
        snr_db: None,
    }
}

pub fn training(cfg: &SystemConfig, variant: TrainingVariant, tag: u64) -> TrainingSet {
    let mut rng = substream(cfg.seed, "acc-pilots", &[tag]);
    make_training_set(cfg, variant, &mut rng).unwrap()
}

pub fn channel(cfg: &SystemConfig, tag: u64) -> ChannelSet {
    let mut rng = substream(cfg.seed, "acc-channel", &[tag]);
    gen_channel(cfg, &profile_for(cfg), &mut rng).unwrap()
}

// ---------------------------------------------------------------------------
// Complex-polynomial oracle for the FCFO stage
// ---------------------------------------------------------------------------

/// Aberth iteration on complex coefficients; independent of the library's
/// real-coefficient implementation. Residuals are verified by the caller.
pub fn complex_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    let radius = (coeffs[0].norm() / coeffs[degree].norm())
        .powf(1.0 / degree as f64)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.287_113) / degree as f64;
            Complex64::from_polar(radius, angle)
        })
        .collect();
    for _ in 0..400 {
        let mut worst = 0.0f64;
        for i in 0..degree {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let newton = p / dp;
            let mut rep = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    rep += 1.0 / (z[i] - zj);
                }
            }
            let step = newton / (Complex64::new(1.0, 0.0) - newton * rep);
            z[i] -= step;
            worst = worst.max(step.norm() / (1.0 + z[i].norm()));
        }
        if worst < 1e-13 {
            break;
        }
    }
    z
}

fn eval_complex_poly(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Reference betas through the complex route: build
/// `f(z) = a^T(z) J_Q L (I - E E^T) L^H a(z)`-style coefficients from the
/// complex matrix `L (I - E E^T) L^H`, root it, pick the Nt reciprocal pairs
/// closest to the unit circle and read the betas off the root phases.
pub fn complex_path_betas(
    signal_basis: &RealMat,
    tm: &TransformMatrices,
    n_sources: usize,
) -> Vec<f64> {
    let q = tm.q();
    // Noise projector in complex arithmetic.
    let mut proj = ComplexMat::identity(q);
    for r in 0..q {
        for c in 0..q {
            let mut acc = 0.0;
            for k in 0..signal_basis.cols() {
                acc += signal_basis.at(r, k) * signal_basis.at(c, k);
            }
            let v = proj.at(r, c) - Complex64::new(acc, 0.0);
            proj.set(r, c, v);
        }
    }
    let a = tm.l_mat.mul(&proj).mul(&tm.l_mat.hermitian());
    // Coefficients of a^T(z) J A a(z): anti-diagonal sums of J A.
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * q - 1];
    for r in 0..q {
        for c in 0..q {
            coeffs[(q - 1 - r) + c] += a.at(r, c);
        }
    }
    let roots = complex_roots(&coeffs);
    // Verify the oracle's own backward error before trusting it.
    let max_c = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for r in &roots {
        let bound = 1e-7 * max_c * r.norm().max(1.0).powi((coeffs.len() - 1) as i32);
        assert!(
            eval_complex_poly(&coeffs, *r).norm() <= bound,
            "complex oracle root residual too large"
        );
    }
    // Reciprocal-conjugate pairs (z, 1/conj(z)): keep one representative per
    // pair, rank by distance to the unit circle.
    let mut pool = roots;
    let mut candidates: Vec<(f64, f64)> = Vec::new(); // (circle distance, beta)
    while let Some(z) = pool.pop() {
        let partner = 1.0 / z.conj();
        if let Some(pos) = pool
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - partner)
                    .norm()
                    .partial_cmp(&(b.1 - partner).norm())
                    .unwrap()
            })
            .and_then(|(pos, w)| ((w - partner).norm() < 1e-3 * (1.0 + partner.norm())).then_some(pos))
        {
            pool.swap_remove(pos);
        }
        // Map the root back to the cotangent domain and apply the same
        // real-part extraction rule as the real path; the conjugate pair
        // maps to a conjugate g pair, so either member gives the same beta.
        let g = Complex64::new(0.0, 1.0) * (z + 1.0) / (z - 1.0);
        let beta = (q as f64 / std::f64::consts::PI * f64::atan2(1.0, g.re)).rem_euclid(q as f64);
        candidates.push(((z.norm() - 1.0).abs(), beta));
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut betas: Vec<f64> = candidates
        .into_iter()
        .take(n_sources)
        .map(|c| c.1)
        .collect();
    betas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    betas
}

// ---------------------------------------------------------------------------
// Dense CRB oracle
// ---------------------------------------------------------------------------

/// Evaluate the CRB with an explicit dense pseudo-inverse (nalgebra), reading
/// the mixing matrix columns straight off the published definition.
pub fn dense_crb_oracle(
    cfg: &SystemConfig,
    ts: &TrainingSet,
    ch: &ChannelSet,
    noise_var: f64,
) -> f64 {
    use nalgebra::{Complex, DMatrix, DVector};
    let n = cfg.subcarriers;
    let nt = cfg.tx_antennas;
    let lmax = cfg.channel_taps;
    // S entry by entry from the comb definition: the (mu, l) column at row n
    // is (1/N) sum_p s~_mu[p] e^{j 2 pi (i_mu + pQ)(n - l)/N}.
    let sm = DMatrix::from_fn(n, nt * lmax, |row, col| {
        let (mu, lag) = (col / lmax, col % lmax);
        let mut acc = Complex::new(0.0, 0.0);
        for (p, &pilot) in ts.base_sequences[mu].iter().enumerate() {
            let bin = (cfg.pilot_offsets[mu] + p * cfg.repetitions) as f64;
            let ph = 2.0 * std::f64::consts::PI * bin * (row as f64 - lag as f64) / n as f64;
            acc += Complex::new(pilot.re, pilot.im) * Complex::new(ph.cos(), ph.sin());
        }
        acc / n as f64
    });
    let gram = sm.adjoint() * &sm;
    let inv = gram.try_inverse().expect("dense Gram inverse");
    let mut denom = 0.0;
    for rx in 0..cfg.rx_antennas {
        let mut h = Vec::new();
        for mu in 0..nt {
            h.extend(ch.link(rx, mu).iter().map(|v| Complex::new(v.re, v.im)));
        }
        let h = DVector::from_vec(h);
        let sh = &sm * h;
        let u = DVector::from_fn(n, |r, _| sh[r] * Complex::new((cfg.cp_len + r) as f64, 0.0));
        let proj = &sm * (&inv * (sm.adjoint() * &u));
        denom += u.dotc(&(&u - proj)).re;
    }
    cfg.subcarriers as f64 * noise_var / (8.0 * std::f64::consts::PI.powi(2) * denom)
}

//! Estimator-level benchmarks: the full two-stage estimate, the FCFO stage
//! alone, and the brute-force grid search it replaces.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cfolab_core::estimator::{
    build_transform_matrices, correct_icfo, estimate_icfo, fcfo_polynomial, map_roots_to_fcfo,
    stack_and_covariance, CfoEstimator,
};
use cfolab_core::evalkit::grid_search_cfo;
use cfolab_core::numkit::roots_real_poly;
use cfolab_core::rng::substream;
use cfolab_core::seqdesign::{make_training_set, SystemConfig, TrainingVariant};
use cfolab_core::sigmodel::{default_power_delay_profile, gen_channel, transmit, ReceivedFrame};

fn reference_config() -> SystemConfig {
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
        seed: 7,
    }
    .validated()
    .unwrap()
}

fn make_frame(cfg: &SystemConfig) -> ReceivedFrame {
    let mut rng = substream(cfg.seed, "bench", &[0]);
    let ts = make_training_set(cfg, TrainingVariant::Ts0, &mut rng).unwrap();
    let profile = default_power_delay_profile(cfg.channel_taps).unwrap();
    let ch = gen_channel(cfg, &profile, &mut rng).unwrap();
    transmit(cfg, &ts, &ch, -2.37, 0.1, &mut rng).unwrap()
}

fn bench_estimator(c: &mut Criterion) {
    let cfg = reference_config();
    let frame = make_frame(&cfg);
    let estimator = CfoEstimator::new(cfg.clone()).unwrap();
    c.bench_function("estimate_full", |b| {
        b.iter(|| estimator.estimate(black_box(&frame)).unwrap())
    });

    let tm = build_transform_matrices(cfg.repetitions).unwrap();
    let (icfo, _) = estimate_icfo(&frame, &cfg).unwrap();
    let corrected = correct_icfo(&frame, icfo, &cfg);
    c.bench_function("fcfo_stage", |b| {
        b.iter(|| {
            let dec = stack_and_covariance(black_box(&corrected), &cfg, &tm).unwrap();
            let poly = fcfo_polynomial(&dec, &tm).unwrap();
            let roots = roots_real_poly(&poly).unwrap().roots;
            map_roots_to_fcfo(&roots, icfo, &cfg).unwrap().fcfo
        })
    });

    let mut group = c.benchmark_group("grid_search");
    group.sample_size(10);
    for bits in [16usize, 18] {
        group.bench_with_input(BenchmarkId::from_parameter(bits), &bits, |b, &bits| {
            b.iter(|| grid_search_cfo(black_box(&frame), &cfg, 1 << bits).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_estimator);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::hint::black_box;

use npi_core::correlations::{
    chsh_bell_parameters, correlation_set, estimate_antidiagonals, MeasurementConfig,
};
use npi_core::countsim::{
    accidental_correction, bin_and_count, generate_timestamps, simulate_counts, ExperimentConfig,
};
use npi_core::optics::{
    analytic_bell_probabilities, build_u, simulate_probabilities, InterferometerConfig, Variant,
};
use npi_core::sample::random_density_matrix;
use npi_core::states::{BellKind, PolarizationState};

fn bench_propagation(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let state = random_density_matrix(&mut rng);
    let config = InterferometerConfig::standard(Variant::Sagnac);

    c.bench_function("build_u_16x16", |b| {
        b.iter(|| black_box(build_u(black_box(&config))))
    });
    c.bench_function("propagate_and_detect", |b| {
        b.iter(|| black_box(simulate_probabilities(black_box(&state), &config).unwrap()))
    });
    c.bench_function("analytic_bell_table", |b| {
        b.iter(|| black_box(analytic_bell_probabilities(BellKind::PsiPlus, &config).unwrap()))
    });
}

fn bench_analysis(c: &mut Criterion) {
    let state = PolarizationState::bell(BellKind::PsiPlus)
        .white_noise(0.96)
        .unwrap();
    let standard =
        simulate_probabilities(&state, &InterferometerConfig::standard(Variant::Sagnac)).unwrap();
    let chsh =
        simulate_probabilities(&state, &InterferometerConfig::chsh(Variant::Sagnac)).unwrap();

    c.bench_function("standard_recovery", |b| {
        b.iter(|| {
            let set =
                correlation_set(black_box(&standard), MeasurementConfig::StandardPi4).unwrap();
            black_box(estimate_antidiagonals(&set).unwrap())
        })
    });
    c.bench_function("chsh_parameters", |b| {
        b.iter(|| {
            let set = correlation_set(black_box(&chsh), MeasurementConfig::ChshPi4).unwrap();
            black_box(chsh_bell_parameters(&set).unwrap())
        })
    });
    c.bench_function("negativity_4x4", |b| {
        b.iter(|| black_box(black_box(&state).negativity()))
    });
}

fn bench_counting(c: &mut Criterion) {
    let state = PolarizationState::bell(BellKind::PsiPlus);
    let table =
        simulate_probabilities(&state, &InterferometerConfig::standard(Variant::Sagnac)).unwrap();
    let config = ExperimentConfig::ideal(1.4e6, 100.0, 7)
        .with_uniform_efficiency(0.003)
        .with_uniform_dark_rate(3_000.0);

    c.bench_function("simulate_counts_lab_scale", |b| {
        b.iter(|| black_box(simulate_counts(black_box(&table), &config).unwrap()))
    });
    let record = simulate_counts(&table, &config).unwrap();
    c.bench_function("accidental_correction", |b| {
        b.iter(|| black_box(accidental_correction(black_box(&record), 5).unwrap()))
    });

    let stream_config = ExperimentConfig::ideal(100_000.0, 1.0, 7)
        .with_uniform_efficiency(0.5)
        .with_uniform_dark_rate(2_000.0);
    c.bench_function("generate_timestamps_100k_pairs", |b| {
        b.iter(|| black_box(generate_timestamps(black_box(&table), &stream_config).unwrap()))
    });
    let stream = generate_timestamps(&table, &stream_config).unwrap();
    c.bench_function("bin_and_count_stream", |b| {
        b.iter(|| black_box(bin_and_count(black_box(&stream), 5, 1.0).unwrap()))
    });
}

criterion_group!(benches, bench_propagation, bench_analysis, bench_counting);
criterion_main!(benches);

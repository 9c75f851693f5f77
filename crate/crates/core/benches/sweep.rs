use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lts0n::harness::{run_sweep, ExperimentConfig, PlantSource, SeedRange};
use lts0n::par::Execution;
use lts0n::plant::{NoiseModel, PlantSpec};

fn batch() -> ExperimentConfig {
    ExperimentConfig {
        plant: PlantSource::Spec(PlantSpec::new(16, 2, 2, NoiseModel::None)),
        n: vec![16],
        sigma: vec![0.01],
        seeds: SeedRange { start: 1, end: 16 },
        ..Default::default()
    }
}

fn sweep(c: &mut Criterion) {
    let cfg = batch();
    let mut group = c.benchmark_group("sweep_n16_16_seeds");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| run_sweep(black_box(&cfg), Execution::Sequential).unwrap()));
    group.bench_function("parallel", |b| b.iter(|| run_sweep(black_box(&cfg), Execution::Parallel).unwrap()));
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);

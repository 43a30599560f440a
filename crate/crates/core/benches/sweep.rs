use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssesprit::experiments::{run_sweep, ExperimentConfig, Method};
use ssesprit::music::{pseudospectrum, MusicOptions};
use ssesprit::signal_model::{random_model, synthesize, AmplitudeLaw, RandomModelSpec};
use ssesprit::Execution;

fn modes() -> Vec<(Execution, &'static str)> {
    let mut modes = vec![(Execution::Sequential, "sequential")];
    if cfg!(feature = "parallel") {
        modes.push((Execution::Parallel, "parallel"));
    }
    modes
}

fn small_sweep(method: Method) -> ExperimentConfig {
    ExperimentConfig {
        methods: vec![method],
        nsr_grid: vec![0.0, 0.2, 0.4],
        trials: 8,
        ..ExperimentConfig::default()
    }
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for method in [Method::Esprit, Method::Music] {
        let config = small_sweep(method);
        for (exec, label) in modes() {
            group.bench_with_input(BenchmarkId::new(method.name(), label), &config, |b, cfg| {
                b.iter(|| run_sweep(black_box(cfg), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn music_grid(c: &mut Criterion) {
    let model = random_model(&RandomModelSpec::new(
        20,
        (2.0, 3.0),
        100,
        AmplitudeLaw::UnitRandomPhase,
        3,
    ))
    .unwrap();
    let y = synthesize(&model, 100).unwrap();
    let mut group = c.benchmark_group("music_grid");
    group.sample_size(20);
    for (exec, label) in modes() {
        let opts = MusicOptions {
            execution: exec,
            ..MusicOptions::default()
        };
        group.bench_function(label, |b| b.iter(|| pseudospectrum(black_box(&y), 20, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sweep, music_grid);
criterion_main!(benches);

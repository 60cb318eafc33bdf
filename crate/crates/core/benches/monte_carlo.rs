use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use exoforest::exec::set_parallel;
use exoforest::mc_harness::empirical_mse;
use exoforest::model::{FeatureKind, ModelSpec};
use exoforest::theory::{perf_measures, ProcessKind};

fn modes() -> [(&'static str, bool); 2] {
    [("sequential", false), ("rayon", true)]
}

fn process_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("perf_measures_l7_1000reps");
    for fk in [FeatureKind::BinaryBernoulliHalf, FeatureKind::UniformUnit] {
        let spec = ModelSpec::config_i(fk);
        for (mode, parallel) in modes() {
            group.bench_with_input(BenchmarkId::new(mode, fk.short_name()), &spec, |b, spec| {
                set_parallel(parallel);
                b.iter(|| perf_measures(ProcessKind::of(fk), spec, black_box(0.3), 7, 100, 1000, 1000, 1).unwrap());
            });
        }
    }
    group.finish();
    set_parallel(true);
}

fn empirical(c: &mut Criterion) {
    let spec = ModelSpec::new(20, vec![1.0; 3], 1.0, FeatureKind::BinaryBernoulliHalf).unwrap();
    let mut group = c.benchmark_group("empirical_mse_b10");
    group.sample_size(10);
    for (mode, parallel) in modes() {
        group.bench_function(mode, |b| {
            set_parallel(parallel);
            b.iter(|| empirical_mse(&spec, black_box(0.5), 4, 10, 1000, 128, 40, 2).unwrap());
        });
    }
    group.finish();
    set_parallel(true);
}

criterion_group!(benches, process_pairs, empirical);
criterion_main!(benches);

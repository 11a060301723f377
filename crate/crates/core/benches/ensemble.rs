use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use marw::montecarlo::{run_ensemble_data_with, EnsembleConfig, Execution};
use marw::ModelParams;

fn ensemble(c: &mut Criterion) {
    let params = ModelParams::new(2, 0.5, 1.0).unwrap();
    let horizon = 10_000;
    let paths = 2_048;
    let cfg = EnsembleConfig::new(params, paths, horizon, 1);
    let mut group = c.benchmark_group("ensemble_d2_p0.5_b1");
    group.sample_size(10);
    group.throughput(Throughput::Elements(paths * horizon as u64));
    let modes = [
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ];
    for (name, mode) in modes {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| run_ensemble_data_with(&cfg, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);

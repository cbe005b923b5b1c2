use criterion::{criterion_group, criterion_main, Criterion};
use grouplearn::harness::{run_cells_sequential, ExperimentConfig, Seeds};

fn config() -> ExperimentConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig1.json");
    let mut cfg = ExperimentConfig::from_path(&path).unwrap();
    cfg.horizon = 2000;
    cfg.seeds = Seeds::Range { base: 1, count: 16 };
    cfg
}

fn replications(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| run_cells_sequential(&cfg, false).unwrap()));
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| grouplearn::harness::run_cells_parallel(&cfg, false).unwrap())
    });
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);

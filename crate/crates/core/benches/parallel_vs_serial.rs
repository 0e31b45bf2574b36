//! Replica fan-out: rayon pool against the single-thread fallback.
//!
//! `cargo bench -p burgers-spde` runs the parallel path (default features);
//! the `sequential` rows call the explicit fallback, so one run shows the
//! speedup side by side. `cargo bench -p burgers-spde --no-default-features`
//! measures the build without rayon compiled in at all.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use burgers_spde::grid::GridSpec;
use burgers_spde::integrator::{simulate, simulate_sequential, SimConfig};
use burgers_spde::noise::{cell_covariance, CorrelationKernel};

fn ensemble_config(replicas: usize) -> SimConfig {
    let mut cfg = SimConfig::new(GridSpec::new(1, 8).unwrap(), 2e-3, 0.5);
    cfg.seed = 42;
    cfg.replicas = replicas;
    cfg.record_stride = usize::MAX / 2;
    cfg
}

fn bench_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(20);
    for replicas in [16usize, 64, 256] {
        let cfg = ensemble_config(replicas);
        group.bench_with_input(BenchmarkId::new("parallel", replicas), &cfg, |b, cfg| {
            b.iter(|| simulate(cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", replicas), &cfg, |b, cfg| {
            b.iter(|| simulate_sequential(cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_covariance(c: &mut Criterion) {
    let mut group = c.benchmark_group("cell_covariance");
    group.sample_size(20);
    let kernel = CorrelationKernel::exponential(0.5).unwrap();
    for (d, n, m) in [(1usize, 16usize, 8usize), (2, 6, 6)] {
        let grid = GridSpec::new(d, n).unwrap();
        group.bench_function(BenchmarkId::new(format!("d{d}_n{n}"), m), |b| {
            b.iter(|| cell_covariance(&kernel, &grid, m).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_ensemble, bench_covariance);
criterion_main!(benches);

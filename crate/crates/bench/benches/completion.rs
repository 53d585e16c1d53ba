use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use svdmds::{classic_mds, optspace_complete, svd_reconstruct, OptSpaceConfig};
use svdmds_bench::scene;

fn svd(c: &mut Criterion) {
    let mut g = c.benchmark_group("svd_reconstruct");
    for n in [50, 100, 200] {
        let (_, obs) = scene(n, 0.5, 0.5, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &obs, |b, obs| {
            b.iter(|| svd_reconstruct(black_box(obs), 5).unwrap())
        });
    }
    g.finish();
}

fn optspace(c: &mut Criterion) {
    let mut g = c.benchmark_group("optspace");
    g.sample_size(20);
    let cfg = OptSpaceConfig::new(5);
    for n in [50, 100] {
        let (_, obs) = scene(n, 0.5, 0.5, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), &obs, |b, obs| {
            b.iter(|| optspace_complete(black_box(obs), &cfg).unwrap())
        });
    }
    g.finish();
}

fn mds(c: &mut Criterion) {
    let mut g = c.benchmark_group("classic_mds");
    for n in [50, 100, 200] {
        let (d, _) = scene(n, 1.0, 0.0, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n), d.matrix(), |b, m| {
            b.iter(|| classic_mds(black_box(m), 3).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, svd, optspace, mds);
criterion_main!(benches);

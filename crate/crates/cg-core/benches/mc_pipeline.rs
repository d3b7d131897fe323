//! Parallel vs sequential Monte-Carlo pipelines. The two paths share the
//! chunk layout and produce bit-identical output, so these groups measure
//! pure scheduling overhead/speedup.
//!
//! Run `cargo bench` for the rayon-backed numbers and
//! `cargo bench --no-default-features` to time the all-sequential build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cg_core::avg::{avg_state_mc, avg_state_mc_seq};
use cg_core::channel::ProbVector;
use cg_core::qstate::BlochVector;
use cg_core::sampling::{cg_radii, cg_radii_seq, RngSeed};
use cg_core::Ensemble;

fn bench_pushforward(c: &mut Criterion) {
    let p = ProbVector::from_asymmetry(0.48).unwrap();
    let mut group = c.benchmark_group("cg_radii_2qubit");
    for &n in &[20_000usize, 100_000] {
        group.bench_with_input(BenchmarkId::new("auto", n), &n, |b, &n| {
            b.iter(|| cg_radii(&p, 2, n, RngSeed::new(1)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, &n| {
            b.iter(|| cg_radii_seq(&p, 2, n, RngSeed::new(1)).unwrap())
        });
    }
    group.finish();
}

fn bench_pushforward_5q(c: &mut Criterion) {
    let p = ProbVector::new(vec![0.4, 0.35, 0.15, 0.08, 0.02]).unwrap();
    let mut group = c.benchmark_group("cg_radii_5qubit");
    group.sample_size(20);
    let n = 10_000usize;
    group.bench_with_input(BenchmarkId::new("auto", n), &n, |b, &n| {
        b.iter(|| cg_radii(&p, 5, n, RngSeed::new(2)).unwrap())
    });
    group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, &n| {
        b.iter(|| cg_radii_seq(&p, 5, n, RngSeed::new(2)).unwrap())
    });
    group.finish();
}

fn bench_avg_state(c: &mut Criterion) {
    let target = BlochVector::new(0.0, 0.0, 0.6);
    let mut group = c.benchmark_group("avg_state_mc");
    group.sample_size(20);
    let n = 100_000usize;
    group.bench_with_input(BenchmarkId::new("auto", n), &n, |b, &n| {
        b.iter(|| avg_state_mc(&target, 0.4, Ensemble::Full, n, RngSeed::new(3)).unwrap())
    });
    group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, &n| {
        b.iter(|| avg_state_mc_seq(&target, 0.4, Ensemble::Full, n, RngSeed::new(3)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_pushforward,
    bench_pushforward_5q,
    bench_avg_state
);
criterion_main!(benches);

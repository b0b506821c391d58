use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use glaeser_bench::{coefficient_grid, signed_square};
use glaeser_core::{decide, refine_bundle, RefinementConfig};

fn refinement(c: &mut Criterion) {
    let cfg = RefinementConfig::default();
    let line = signed_square(12);
    c.bench_function("refine_signed_square_line", |b| {
        b.iter(|| refine_bundle(black_box(&line), &cfg).unwrap())
    });
    let grid = coefficient_grid(4);
    let mut g = c.benchmark_group("decide");
    g.sample_size(10);
    g.bench_function("coefficient_grid", |b| b.iter(|| decide(black_box(&grid), &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, refinement);
criterion_main!(benches);

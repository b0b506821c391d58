use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use glaeser_bench::jets;

fn multiply(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet_multiply");
    for (n, m) in [(1, 3), (2, 2), (2, 4), (3, 3)] {
        let js = jets(n, m, 2);
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_m{m}")), &js, |b, js| {
            b.iter(|| black_box(&js[0]).multiply(black_box(&js[1])).unwrap())
        });
    }
    g.finish();
}

fn recenter(c: &mut Criterion) {
    let mut g = c.benchmark_group("jet_recenter");
    for (n, m) in [(1, 3), (2, 3), (3, 3)] {
        let j = jets(n, m, 1).pop().unwrap();
        let y: Vec<f64> = (0..n).map(|i| 0.05 + 0.01 * i as f64).collect();
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_m{m}")), &j, |b, j| {
            b.iter(|| black_box(j).recenter(black_box(&y)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, multiply, recenter);
criterion_main!(benches);

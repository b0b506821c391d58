use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use glaeser_bench::signed_square_field;
use glaeser_core::{extend, MultiIndex};

fn extension(c: &mut Criterion) {
    let field = signed_square_field(12);
    let dom = field.bounding_box(0.5);
    c.bench_function("extend_build", |b| b.iter(|| extend(black_box(&field), &dom).unwrap()));
    let f = extend(&field, &dom).unwrap();
    let grid = dom.grid(101);
    let d0 = MultiIndex::zero(1);
    c.bench_function("extend_eval_grid_101", |b| {
        b.iter(|| grid.iter().map(|y| f.eval(y, &d0).unwrap()[0]).sum::<f64>())
    });
}

criterion_group!(benches, extension);
criterion_main!(benches);

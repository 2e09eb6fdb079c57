use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use levyarc::special::bessel_k0;
use levyarc::transforms::{arcsine_transform, upsilon0};
use levyarc::QuadratureBudget;
use levyarc_bench::{k0_source, radius_grid, upsilon_source};

fn k0(c: &mut Criterion) {
    let grid = radius_grid();
    c.bench_function("bessel_k0/grid32", |b| {
        b.iter(|| grid.iter().map(|&x| bessel_k0(black_box(x)).unwrap().value).sum::<f64>())
    });
}

fn a1(c: &mut Criterion) {
    let budget = QuadratureBudget::default();
    let grid = radius_grid();
    let t = arcsine_transform(1, &k0_source()).unwrap();
    c.bench_function("a1_ex41/tabulate32", |b| b.iter(|| t.tabulate(black_box(&grid), &budget).unwrap()));
}

fn ups0(c: &mut Criterion) {
    let budget = QuadratureBudget::default();
    let grid = radius_grid();
    let t = upsilon0(&upsilon_source()).unwrap();
    c.bench_function("ups0_ex42/tabulate32", |b| b.iter(|| t.tabulate(black_box(&grid), &budget).unwrap()));
}

criterion_group!(benches, k0, a1, ups0);
criterion_main!(benches);

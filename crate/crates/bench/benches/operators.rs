use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use thermoshift_bench::{cf12, geometric_tail};
use thermoshift_core::pressure::pressure_estimate;
use thermoshift_core::transfer::power_iteration;
use thermoshift_core::{AlphabetCutoff, GibbsTable, Grid, GridFunction, HatOperator, SpectralParams, Spectrum};

fn cut(n: u32) -> AlphabetCutoff {
    AlphabetCutoff::new(n).unwrap()
}

fn apply_operator(c: &mut Criterion) {
    let mut group = c.benchmark_group("hat_operator_apply");
    for cells in [512usize, 2048, 8192] {
        let m = cf12(0.53);
        let op = HatOperator::new(&m, &cut(2), Grid::new(*m.system().domain(), cells).unwrap()).unwrap();
        let g = GridFunction::constant(*op.grid(), 1.0);
        group.bench_with_input(BenchmarkId::new("cf12", cells), &cells, |b, _| {
            b.iter(|| op.apply(black_box(&g)))
        });
    }
    let m = geometric_tail();
    let op = HatOperator::new(&m, &cut(50), Grid::new(*m.system().domain(), 2048).unwrap()).unwrap();
    let g = GridFunction::constant(*op.grid(), 1.0);
    group.bench_function("geometric_tail/2048", |b| b.iter(|| op.apply(black_box(&g))));
    group.finish();
}

fn eigen(c: &mut Criterion) {
    let m = cf12(0.53);
    let op = HatOperator::new(&m, &cut(2), Grid::new(*m.system().domain(), 2048).unwrap()).unwrap();
    c.bench_function("power_iteration/cf12", |b| {
        b.iter(|| power_iteration(&op, 1e-10, 10_000).unwrap())
    });
    c.bench_function("spectrum/cf12", |b| {
        b.iter(|| Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap())
    });
}

fn pressure(c: &mut Criterion) {
    let mut group = c.benchmark_group("pressure_estimate");
    group.sample_size(10);
    let m = cf12(0.53);
    for n in [8usize, 12, 14] {
        group.bench_with_input(BenchmarkId::new("cf12", n), &n, |b, &n| {
            b.iter(|| pressure_estimate(&m, &cut(2), n, &[1]).unwrap())
        });
    }
    group.finish();
}

fn tables(c: &mut Criterion) {
    let m = cf12(0.53);
    let sp = Spectrum::compute(&m, &cut(2), &SpectralParams::default()).unwrap();
    c.bench_function("gibbs_table/cf12/depth8", |b| {
        b.iter(|| GibbsTable::build(&m, &cut(2), 8, &sp).unwrap())
    });
}

criterion_group!(benches, apply_operator, eigen, pressure, tables);
criterion_main!(benches);

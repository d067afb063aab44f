use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dlab_core::lp::{band_random, SupportSpec};
use dlab_core::nls::{strang_step, Nonlinearity};
use dlab_core::spectral::{dealiased_product, free_propagate};
use dlab_core::{par, Grid};

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", true), ("sequential", false)]
}

fn propagate(c: &mut Criterion) {
    let grid = Grid::new(3, std::f64::consts::TAU, 32).unwrap();
    let f = band_random(&grid, &SupportSpec::Ball { center: [0.0; 3], radius: 8.0 }, 1).unwrap();
    let mut group = c.benchmark_group("free_propagate_32^3");
    for (name, on) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &on, |b, &on| {
            par::set_parallel(on);
            b.iter(|| free_propagate(&f, 0.1));
        });
    }
    group.finish();
    par::set_parallel(true);
}

fn product(c: &mut Criterion) {
    let grid = Grid::new(2, std::f64::consts::TAU, 256).unwrap();
    let f = band_random(&grid, &SupportSpec::Ball { center: [0.0; 3], radius: 90.0 }, 2).unwrap();
    let mut group = c.benchmark_group("dealiased_product_256^2");
    for (name, on) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &on, |b, &on| {
            par::set_parallel(on);
            b.iter(|| dealiased_product(&f, &f).unwrap());
        });
    }
    group.finish();
    par::set_parallel(true);
}

fn hartree_step(c: &mut Criterion) {
    let grid = Grid::new(3, std::f64::consts::TAU, 32).unwrap();
    let u = band_random(&grid, &SupportSpec::Ball { center: [0.0; 3], radius: 6.0 }, 3).unwrap();
    let mut group = c.benchmark_group("strang_step_hartree_32^3");
    group.sample_size(20);
    for (name, on) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &on, |b, &on| {
            par::set_parallel(on);
            b.iter(|| strang_step(&u, 0.01, Nonlinearity::hartree(1.0)).unwrap());
        });
    }
    group.finish();
    par::set_parallel(true);
}

criterion_group!(benches, propagate, product, hartree_step);
criterion_main!(benches);

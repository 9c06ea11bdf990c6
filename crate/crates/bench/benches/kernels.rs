use criterion::{criterion_group, criterion_main, Criterion};
use hlab::fourier::{analyze_with, evolve_schrodinger, synthesize, synthesize_extrapolated};
use hlab::group::GroupPoint;
use hlab::kernels::{default_series_budget, heat_kernel_gaveau, heat_kernel_series, schrodinger_kernel};
use hlab::solutions::{bump_data, evolve_by_convolution, KernelSource, SpectralSetup};
use hlab_bench::{bump_coefficients, bump_convolution, strip_queries};
use std::hint::black_box;

fn kernels(c: &mut Criterion) {
    let forward = strip_queries(1e-10, true);
    let queries = strip_queries(1e-10, false);
    c.bench_function("heat series", |b| {
        b.iter(|| {
            for q in &forward {
                black_box(heat_kernel_series(q, default_series_budget()).unwrap());
            }
        })
    });
    c.bench_function("heat integral", |b| {
        b.iter(|| {
            for q in &forward {
                black_box(heat_kernel_gaveau(q).unwrap());
            }
        })
    });
    c.bench_function("schrodinger kernel", |b| {
        b.iter(|| {
            for q in &queries {
                black_box(schrodinger_kernel(q).unwrap());
            }
        })
    });
}

fn spectral(c: &mut Criterion) {
    let u0 = bump_data(1.0, 1).unwrap();
    let setup = SpectralSetup::standard();
    let mut group = c.benchmark_group("spectral");
    group.sample_size(10);
    group.bench_function("analysis", |b| {
        b.iter(|| black_box(analyze_with(&u0, setup.ell_max, &setup.grid, setup.quad)))
    });
    let coefficients = evolve_schrodinger(&bump_coefficients(), 3.0);
    group.bench_function("synthesis", |b| b.iter(|| black_box(synthesize(&coefficients, 0.3, 1.0))));
    group.bench_function("synthesis extrapolated", |b| {
        b.iter(|| black_box(synthesize_extrapolated(&coefficients, 0.3, 1.0)))
    });
    group.finish();
}

fn convolution(c: &mut Criterion) {
    let (grid, table) = bump_convolution(24);
    let w = GroupPoint::d1(0.3, -0.2, 1.0);
    let mut group = c.benchmark_group("convolution");
    group.sample_size(10);
    group.bench_function("table 24^3", |b| {
        b.iter(|| black_box(evolve_by_convolution(&grid, 3.0, &w, KernelSource::Table(&table)).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, kernels, spectral, convolution);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ern_core::{t_power, Region, Stencil};
use ern_scatter_bench::{black_hole, exterior_grid, pulse_lines};
use std::hint::black_box;

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for n in [128usize, 256, 512] {
        let stencil = Stencil::new(black_hole(), 1, exterior_grid(n)).unwrap();
        let (u_line, v_line) = pulse_lines(n);
        group.throughput(Throughput::Elements(((n + 1) * (n + 1)) as u64));
        group.bench_with_input(BenchmarkId::new("forward", n), &n, |b, _| {
            b.iter(|| stencil.forward_from_lines(black_box(&u_line), black_box(&v_line)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("backward", n), &n, |b, _| {
            b.iter(|| stencil.backward_from_lines(black_box(&u_line), black_box(&v_line)).unwrap())
        });
    }
    group.finish();
}

fn stencil_setup(c: &mut Criterion) {
    let mut group = c.benchmark_group("stencil_setup");
    for n in [128usize, 512] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| Stencil::new(black_hole(), 1, exterior_grid(black_box(n))).unwrap())
        });
    }
    group.finish();
}

fn tortoise_inversion(c: &mut Criterion) {
    let bh = black_hole();
    let points: Vec<f64> = (0..1000).map(|k| -200.0 + 0.4 * k as f64).collect();
    c.bench_function("invert_tortoise_exterior_1000", |b| {
        b.iter(|| {
            for &x in &points {
                black_box(bh.invert_tortoise(black_box(x), Region::Exterior).unwrap());
            }
        })
    });
}

fn time_derivatives(c: &mut Criterion) {
    let n = 256;
    let (u_line, v_line) = pulse_lines(n);
    let field = Stencil::new(black_hole(), 1, exterior_grid(n))
        .unwrap()
        .forward_from_lines(&u_line, &v_line)
        .unwrap();
    let mut group = c.benchmark_group("t_power");
    for m in [1u32, 2] {
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| {
            b.iter(|| t_power(black_box(&field), m).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps, stencil_setup, tortoise_inversion, time_derivatives);
criterion_main!(benches);

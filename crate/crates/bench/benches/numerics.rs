use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vortex_oam::matrix::{radial_double_integral, PairDensity};
use vortex_oam::specfun::{bessel_j, bessel_j_range, Integrator};
use vortex_oam::spectra::spectrum_from_engine;
use vortex_oam::{kernel_coefficient, kernel_fourier, ChannelWindow, DipoleTransition, Displacement};
use vortex_oam_bench::{default_engine, warm_engine};

fn bessel(c: &mut Criterion) {
    let mut g = c.benchmark_group("bessel");
    for &x in &[0.5, 5.0, 50.0] {
        g.bench_with_input(BenchmarkId::new("j3", x), &x, |b, &x| {
            b.iter(|| bessel_j(3, black_box(x)))
        });
    }
    g.bench_function("range_-20_20_at_7", |b| {
        b.iter(|| bessel_j_range(-20, 20, black_box(7.0)))
    });
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    c.bench_function("gauss_kronrod_oscillatory", |b| {
        let integ = Integrator::new(1e-10);
        b.iter(|| integ.integrate(|x| (black_box(20.0) * x).cos() * (-x).exp(), 0.0, 10.0))
    });
}

fn kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel");
    for &(r, q) in &[(1.0, 3.0), (1.0, 1.2)] {
        let id = format!("{r}_{q}");
        g.bench_with_input(BenchmarkId::new("fourier_quadrature", &id), &(r, q), |b, &(r, q)| {
            b.iter(|| kernel_fourier(1, black_box(r), black_box(q), 1e-10))
        });
        g.bench_with_input(BenchmarkId::new("closed_form", &id), &(r, q), |b, &(r, q)| {
            b.iter(|| kernel_coefficient(1, black_box(r), black_box(q)))
        });
    }
    g.finish();
}

fn radial(c: &mut Criterion) {
    let mut g = c.benchmark_group("radial");
    g.sample_size(10);
    let density = PairDensity::Transition(DipoleTransition::s_to_p(1, 1.0).unwrap());
    g.bench_function("double_integral_n1_m2", |b| {
        b.iter(|| radial_double_integral(1, 2, 1.0, 1.0, &density, 1, 1e-7))
    });
    g.finish();
}

fn expansion(c: &mut Criterion) {
    let mut g = c.benchmark_group("expansion");
    g.sample_size(10);
    let warm = warm_engine();
    let d = Displacement::new(2.0).unwrap();
    g.bench_function("amplitude_cached_r0_2", |b| b.iter(|| warm.amplitude(black_box(1), d)));
    let window = ChannelWindow::new(-6, 8).unwrap();
    g.bench_function("spectrum_cached_r0_2", |b| {
        b.iter(|| spectrum_from_engine(&warm, d, window, 1e-3))
    });
    g.bench_function("spectrum_cold_r0_2", |b| {
        b.iter(|| spectrum_from_engine(&default_engine(), d, window, 1e-3))
    });
    g.finish();
}

criterion_group!(benches, bessel, quadrature, kernel, radial, expansion);
criterion_main!(benches);

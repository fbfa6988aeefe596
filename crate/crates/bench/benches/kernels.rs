use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use toda_bench::{gap_model, shock_state};
use toda_core::asymptotics::AsymptoticModel;
use toda_core::lattice::{evolve, toda_rhs};
use toda_core::riemann::TwoBandSurface;
use toda_core::whitham;
use toda_core::Background;

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice");
    for half in [500, 5000] {
        let s = shock_state(half, 10.0);
        g.bench_with_input(BenchmarkId::new("rhs", 2 * half + 1), &s, |b, s| b.iter(|| toda_rhs(black_box(s))));
    }
    let s = shock_state(200, 0.0);
    g.sample_size(10);
    g.bench_function("evolve_t20_401_sites", |b| b.iter(|| evolve(black_box(&s), 20.0, 1e-10, 1e-10).unwrap()));
    g.finish();
}

fn theta(c: &mut Criterion) {
    let m = gap_model();
    let tau = m.tau();
    let z = m.phase_vector(17, 3.0);
    c.bench_function("theta_derivs", |b| b.iter(|| toda_core::riemann::theta_derivs(black_box(z), black_box(tau))));
    c.bench_function("two_band_point", |b| b.iter(|| m.two_band(black_box(17), black_box(3.0)).unwrap()));
}

fn construction(c: &mut Criterion) {
    let left = Background::new(0.4, -2.0).unwrap();
    let mut g = c.benchmark_group("construction");
    g.sample_size(20);
    g.bench_function("surface", |b| b.iter(|| TwoBandSurface::new(black_box(-2.8), -1.2, -1.0, 1.0).unwrap()));
    g.bench_function("gamma_mu", |b| b.iter(|| whitham::gamma_mu(black_box(0.8), left).unwrap()));
    let model = AsymptoticModel::pure_step(left, Background::unit()).unwrap();
    g.bench_function("whitham_leading_term", |b| b.iter(|| model.leading_term(black_box(80), 100.0).unwrap()));
    g.finish();
}

criterion_group!(benches, lattice, theta, construction);
criterion_main!(benches);

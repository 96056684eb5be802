use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ltbound_core::bessel::{bessel_j0, find_j0};
use ltbound_core::diffusion::simulate_disk_conditioned;
use ltbound_core::exact::{confined_table, estimate_c4, prob_b_plus, DEFAULT_NODE_BUDGET};
use ltbound_core::regen::{build_excursion_table, estimate_speed, SpeedConfig};
use ltbound_core::ExcursionClass;

fn bessel(c: &mut Criterion) {
    c.bench_function("bessel_j0", |b| b.iter(|| bessel_j0(black_box(2.3)).unwrap()));
    c.bench_function("find_j0", |b| b.iter(find_j0));
}

fn exact(c: &mut Criterion) {
    c.bench_function("prob_b_plus n=12 L0=2", |b| {
        b.iter(|| prob_b_plus(black_box(12), 2).unwrap())
    });
    c.bench_function("confined_table n=10 L0=3", |b| {
        b.iter(|| confined_table(black_box(10), 3, DEFAULT_NODE_BUDGET).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let c4 = estimate_c4(2, 14).unwrap().point;
    c.bench_function("excursion table m_max=24 L0=2", |b| {
        b.iter(|| build_excursion_table(2, c4, black_box(24), ExcursionClass::Positive).unwrap())
    });
    let mut cfg = SpeedConfig::new(2, c4, 24, 1);
    cfg.num_excursions = 10_000;
    c.bench_function("estimate_speed 1e4 excursions", |b| {
        b.iter(|| estimate_speed(black_box(&cfg)).unwrap())
    });
    c.bench_function("disk path T=1 dt=1e-4", |b| {
        b.iter(|| simulate_disk_conditioned(1.0, 1e-4, 0.5, black_box(3)).unwrap())
    });
}

criterion_group!(benches, bessel, exact, sampling);
criterion_main!(benches);

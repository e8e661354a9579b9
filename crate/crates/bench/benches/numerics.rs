use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use wlsi_core::oracle::{sinh_nodes, DiscreteOperator};
use wlsi_core::transport::{hopf_lax, Cost};
use wlsi_core::{make_builtin, MeasureKind, Weight};

fn quadrature(c: &mut Criterion) {
    let cauchy = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
    let expo = make_builtin(MeasureKind::Exponential, 1).unwrap();
    let mut g = c.benchmark_group("quadrature");
    g.bench_function("cauchy sqrt|x|", |b| b.iter(|| cauchy.expectation(|x| black_box(x).abs().sqrt()).unwrap()));
    g.bench_function("cauchy tail mass", |b| b.iter(|| cauchy.tail_mass(black_box(37.0)).unwrap()));
    g.bench_function("exponential x^6", |b| b.iter(|| expo.expectation(|x| black_box(x).powi(6)).unwrap()));
    g.finish();
}

fn spectral_gap(c: &mut Criterion) {
    let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
    let w = Weight::new("x2log", |x: f64| (1.0 + x * x) * (std::f64::consts::E + x * x).ln());
    let mut g = c.benchmark_group("oracle");
    g.sample_size(20);
    for n in [501, 2001] {
        let op = DiscreteOperator::build(&mu, &w, &sinh_nodes(1e3, n, 1.0));
        g.bench_function(format!("spectral gap n={n}"), |b| b.iter(|| black_box(&op).spectral_gap()));
    }
    let op = DiscreteOperator::build(&mu, &w, &sinh_nodes(1e3, 501, 1.0));
    g.bench_function("lsi ratio n=501", |b| b.iter(|| black_box(&op).lsi_ratio_max(2)));
    g.finish();
}

fn inf_convolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("hopf_lax");
    for n in [1001, 10_001] {
        let u: Vec<f64> = (0..n).map(|i| (-4.0 + 8.0 * i as f64 / (n - 1) as f64).sinh()).collect();
        let f: Vec<f64> = u.iter().map(|x| (3.0 * x).cos() + 0.1 * x.abs()).collect();
        g.bench_function(format!("quadratic n={n}"), |b| b.iter(|| hopf_lax(black_box(&f), &u, 0.5, Cost::Quadratic)));
        g.bench_function(format!("linear n={n}"), |b| b.iter(|| hopf_lax(black_box(&f), &u, 0.5, Cost::Linear)));
    }
    g.finish();
}

criterion_group!(benches, quadrature, spectral_gap, inf_convolution);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use polybubble::bubble::{bubble_value, polylaplacian_bubble};
use polybubble::energy::j_interaction;
use polybubble::lattice::{lattice_sum_cross, lattice_sum_same};
use polybubble::residual::e_k_value;
use polybubble::{Bubble, Potential, SpaceParams};
use polybubble_bench::{annulus_point, ansatz, doubled_circle, space_6_1};

fn bubble_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("bubble");
    for (n, m) in [(6, 1), (10, 2)] {
        let sp = SpaceParams::new(n, m).unwrap();
        let b = Bubble::new(vec![0.0; n], 50.0).unwrap();
        let mut y = vec![0.0; n];
        y[0] = 0.013;
        g.bench_with_input(BenchmarkId::new("value", format!("{n},{m}")), &y, |bch, y| {
            bch.iter(|| bubble_value(black_box(y), &b, &sp))
        });
        g.bench_with_input(BenchmarkId::new("polylaplacian", format!("{n},{m}")), &y, |bch, y| {
            bch.iter(|| polylaplacian_bubble(m, black_box(y), &b, &sp).unwrap())
        });
    }
    g.finish();
}

fn lattice(c: &mut Criterion) {
    let mut g = c.benchmark_group("lattice");
    for k in [256usize, 4096] {
        let cfg = doubled_circle(k, 6);
        g.bench_with_input(BenchmarkId::new("same", k), &cfg, |b, cfg| b.iter(|| lattice_sum_same(4.0, cfg).unwrap()));
        g.bench_with_input(BenchmarkId::new("cross", k), &cfg, |b, cfg| b.iter(|| lattice_sum_cross(4.0, cfg).unwrap()));
    }
    g.finish();
}

fn e_k(c: &mut Criterion) {
    let a = ansatz(4, 1e4);
    let v = Potential::Constant { v0: 1.0 };
    let y = annulus_point();
    c.bench_function("e_k/annulus_point", |b| b.iter(|| e_k_value(black_box(&y), &a, &v)));
}

fn j_integral(c: &mut Criterion) {
    let sp = space_6_1();
    let mut g = c.benchmark_group("j_interaction");
    g.sample_size(10);
    g.bench_function("d=1,lambda=100", |b| b.iter(|| j_interaction(black_box(1.0), 100.0, &sp).unwrap()));
    g.finish();
}

criterion_group!(benches, bubble_eval, lattice, e_k, j_integral);
criterion_main!(benches);

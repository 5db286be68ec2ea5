//! Single-pass estimator benchmarks at the scales used in the test
//! suite's recovery studies.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use varcomp::{
    estimate_crossed, estimate_famsize, estimate_one_way_fr, gen_famsize, pairwise_sum, summarize,
    CountDist, EffectDist, FamsizeSpec, MomentOrder, SolverOptions,
};
use varcomp_bench::{crossed_data, one_way_sample};

fn bench_one_way(c: &mut Criterion) {
    let sample = one_way_sample(20_000, 1);
    c.bench_function("one_way_fr/r=20000", |b| {
        b.iter(|| estimate_one_way_fr(black_box(&sample)).unwrap())
    });
}

fn bench_famsize(c: &mut Criterion) {
    let sample = gen_famsize(&FamsizeSpec {
        c1: 1.0,
        c2: -0.1,
        sigma_a2: 1.0,
        sigma_e2: 1.0,
        n_groups: 5000,
        count_dist: CountDist::ShiftedPoisson { lambda: 3.0 },
        alpha_dist: EffectDist::normal_with_variance(1.0),
        eps_dist: EffectDist::normal_with_variance(1.0),
        seed: 2,
    })
    .unwrap();
    let opts = SolverOptions::default();
    c.bench_function("famsize/r=5000", |b| {
        b.iter(|| estimate_famsize(black_box(&sample), &opts).unwrap())
    });
}

fn bench_crossed(c: &mut Criterion) {
    let data = crossed_data(500, 500, 0.05, 3);
    c.bench_function("crossed/500x500_d0.05", |b| {
        b.iter(|| estimate_crossed(black_box(&data)).unwrap())
    });
}

fn bench_sums(c: &mut Criterion) {
    let values: Vec<f64> = (0..1_000_000)
        .map(|i| ((i as f64) * 0.739).sin() * 3.0 + 10.0)
        .collect();
    c.bench_function("pairwise_sum/1e6", |b| {
        b.iter(|| pairwise_sum(black_box(&values)))
    });
    c.bench_function("summarize_order4/1e6", |b| {
        b.iter(|| summarize(black_box(&values), MomentOrder::Four).unwrap())
    });
}

criterion_group!(benches, bench_one_way, bench_famsize, bench_crossed, bench_sums);
criterion_main!(benches);

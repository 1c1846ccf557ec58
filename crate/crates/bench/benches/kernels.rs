use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use maxlat_core::krawtchouk::KrawtchoukTable;
use maxlat_core::lattice::{ball_count, profile_spectrum, BallSpec, Limits, MarkedClass, Mode};
use maxlat_core::maxop::{apply_avg, operator_norm_probe, GridFunction, Semantics};
use maxlat_core::multiplier::{MultiplierDp, TorusPoint};
use std::hint::black_box;

fn counting(c: &mut Criterion) {
    let limits = Limits::default();
    let mut g = c.benchmark_group("ball_count");
    for (d, n) in [(16u32, 16u32), (64, 32), (1000, 20)] {
        let spec = BallSpec::new(d, n).unwrap();
        g.bench_with_input(BenchmarkId::new("exact", format!("{d}x{n}")), &spec, |b, s| {
            b.iter(|| ball_count(black_box(*s), Mode::Exact, &limits).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("fast", format!("{d}x{n}")), &spec, |b, s| {
            b.iter(|| ball_count(black_box(*s), Mode::Fast, &limits).unwrap())
        });
    }
    g.finish();
    c.bench_function("profile_spectrum/unit/32x12", |b| {
        b.iter(|| profile_spectrum(32, 12, &MarkedClass::unit(), None, &limits).unwrap())
    });
}

fn multipliers(c: &mut Criterion) {
    let limits = Limits::default();
    let mut g = c.benchmark_group("multiplier_dp");
    g.sample_size(20);
    for (d, n) in [(64u32, 32u32), (1000, 23)] {
        let dp = MultiplierDp::new(d, n, &limits).unwrap();
        let xi = TorusPoint::new((0..d).map(|i| 0.37 * (i as f64 + 1.0).sin()).collect());
        g.bench_function(format!("{d}x{n}"), |b| b.iter(|| dp.eval_all(black_box(&xi)).unwrap()));
    }
    g.finish();
}

fn krawtchouk(c: &mut Criterion) {
    c.bench_function("krawtchouk_table/60", |b| {
        b.iter(|| KrawtchoukTable::new(black_box(60)))
    });
}

fn operators(c: &mut Criterion) {
    let f = GridFunction::delta(3, 32).unwrap();
    c.bench_function("apply_avg/d3_M32_N4", |b| {
        b.iter(|| apply_avg(black_box(&f), 4, Semantics::Periodic).unwrap())
    });
    let mut g = c.benchmark_group("norm_probe");
    g.sample_size(10);
    g.bench_function("d2_M32_8trials", |b| {
        b.iter(|| operator_norm_probe(2, 32, &[1, 2, 4, 8], 8, 1).unwrap())
    });
    g.finish();
}

criterion_group!(benches, counting, multipliers, krawtchouk, operators);
criterion_main!(benches);

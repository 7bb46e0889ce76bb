use criterion::{black_box, criterion_group, criterion_main, Criterion};
use pooling_core::coc::{mean_response_both, normalization};
use pooling_core::cos::ctmc::{typed_ctmc_oracle_with, CtmcOptions};
use pooling_core::cos::waiting_probabilities;
use pooling_core::erlang::{erlang_c, ProviderParams};
use pooling_core::pareto::{ksbs, pareto_frontier, Metric, PolicyKind};
use pooling_core::SharingConfig;

fn bench_erlang_c(c: &mut Criterion) {
    c.bench_function("erlang_c n=50", |b| {
        b.iter(|| erlang_c(black_box(44.0), black_box(50)).unwrap())
    });
}

fn bench_coc(c: &mut Criterion) {
    let p1 = ProviderParams::new(8.0, 1.0, 10).unwrap();
    let p2 = ProviderParams::new(6.0, 1.0, 10).unwrap();
    let cfg = SharingConfig::new(4.0, 7.0, &p1, &p2).unwrap();
    c.bench_function("coc normalization 10+10", |b| {
        b.iter(|| normalization(black_box(&p1), black_box(&p2), black_box(&cfg)).unwrap())
    });
    c.bench_function("coc mean response 10+10", |b| {
        b.iter(|| mean_response_both(black_box(&p1), black_box(&p2), black_box(&cfg)).unwrap())
    });
}

fn bench_cos(c: &mut Criterion) {
    let p1 = ProviderParams::from_standalone_wait(0.30, 1.0, 10).unwrap();
    let p2 = ProviderParams::from_standalone_wait(0.10, 1.0, 10).unwrap();
    let cfg = SharingConfig::new(3.0, 5.0, &p1, &p2).unwrap();
    c.bench_function("cos waiting 10+10", |b| {
        b.iter(|| waiting_probabilities(black_box(&p1), black_box(&p2), black_box(&cfg)).unwrap())
    });
}

fn bench_ctmc(c: &mut Criterion) {
    let p1 = ProviderParams::new(0.24, 1.0, 2).unwrap();
    let p2 = ProviderParams::new(0.24, 1.0, 2).unwrap();
    let cfg = SharingConfig::new(1.0, 1.0, &p1, &p2).unwrap();
    let opts = CtmcOptions {
        buffer_cap: 10,
        ..CtmcOptions::default()
    };
    c.bench_function("ctmc oracle 2+2 b=10", |b| {
        b.iter(|| {
            typed_ctmc_oracle_with(black_box(&p1), black_box(&p2), black_box(&cfg), opts).unwrap()
        })
    });
}

fn bench_frontier(c: &mut Criterion) {
    let p1 = ProviderParams::from_standalone_wait(0.30, 1.0, 10).unwrap();
    let p2 = ProviderParams::from_standalone_wait(0.10, 1.0, 10).unwrap();
    c.bench_function("cos frontier step 0.10", |b| {
        b.iter(|| {
            pareto_frontier(
                black_box(&p1),
                black_box(&p2),
                PolicyKind::CancelOnStart,
                Metric::Wait,
                0.10,
            )
            .unwrap()
        })
    });
    c.bench_function("cos ksbs step 0.10", |b| {
        b.iter(|| {
            ksbs(
                black_box(&p1),
                black_box(&p2),
                PolicyKind::CancelOnStart,
                Metric::Wait,
                0.10,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_erlang_c,
    bench_coc,
    bench_cos,
    bench_ctmc,
    bench_frontier
);
criterion_main!(benches);

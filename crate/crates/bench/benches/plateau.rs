use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gardingkit::plateau::{cap_profile, newton, solve, SolverConfig};
use std::hint::black_box;

fn newton_from_cap(c: &mut Criterion) {
    let mut g = c.benchmark_group("newton_cap_start");
    for m in [256, 1024, 2048] {
        let mut cfg = SolverConfig::new(6, 3, 0.125, 1.0, vec![0.05]);
        cfg.nodes = m;
        let u0 = cap_profile(&cfg, 0.05).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &u0, |b, u0| {
            b.iter(|| newton(black_box(&cfg), 0.05, u0.clone()).unwrap())
        });
    }
    g.finish();
}

fn continuation(c: &mut Criterion) {
    let cfg = SolverConfig::new(6, 3, 0.125, 1.0, vec![0.2, 0.1, 0.05, 0.025]);
    c.bench_function("solve 4 heights M=2048", |b| b.iter(|| solve(black_box(&cfg)).unwrap()));
}

criterion_group!(benches, newton_from_cap, continuation);
criterion_main!(benches);

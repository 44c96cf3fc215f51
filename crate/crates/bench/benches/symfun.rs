use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gardingkit::cones::{sample, SampleSpec, Stratum};
use gardingkit::symfun::build_bundle;
use std::hint::black_box;

fn bundles(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_bundle");
    for n in [4, 8, 16] {
        let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * i as f64).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| b.iter(|| build_bundle(black_box(v)).unwrap()));
    }
    g.finish();
}

fn derivatives(c: &mut Criterion) {
    let v: Vec<f64> = (0..8).map(|i| 0.5 + 0.21 * i as f64).collect();
    let b = build_bundle(&v).unwrap();
    c.bench_function("sigma_hessian n=8 k=4", |x| x.iter(|| black_box(&b).sigma_hessian(4)));
    c.bench_function("quotient_q n=8 k=4", |x| x.iter(|| black_box(&b).quotient_q(4).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let spec = SampleSpec::new(6, 3, 1.0, 2.0, Stratum::NearBoundary, 42, 1000);
    c.bench_function("sample near_boundary 1000 (6,3)", |b| b.iter(|| sample(black_box(&spec)).unwrap()));
}

criterion_group!(benches, bundles, derivatives, sampling);
criterion_main!(benches);

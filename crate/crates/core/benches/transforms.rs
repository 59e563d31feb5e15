use auon_core::rng::seeded;
use auon_core::transforms::{auon, hybrid, newton_schulz, FROBENIUS_EPS, RMS_EPS};
use auon_core::{DenseMatrix, NsCoeffs};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn transforms(c: &mut Criterion) {
    let mut group = c.benchmark_group("transforms");
    group.sample_size(10);
    for n in [64usize, 256] {
        let g = DenseMatrix::random_gaussian(n, n, &mut seeded(n as u64));
        group.bench_with_input(BenchmarkId::new("auon", n), &g, |b, g| {
            b.iter(|| auon(g, FROBENIUS_EPS, RMS_EPS))
        });
        group.bench_with_input(BenchmarkId::new("hybrid1", n), &g, |b, g| {
            b.iter(|| hybrid(g, 1, NsCoeffs::HYBRID).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("newton_schulz5", n), &g, |b, g| {
            b.iter(|| newton_schulz(g, 5, NsCoeffs::MUON).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transforms);
criterion_main!(benches);

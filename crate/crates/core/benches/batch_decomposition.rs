//! Compares the parallel batch decomposition against the sequential
//! fallback on the same workload.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use simplex_core::{
    fit_decomposition_batch, fit_decomposition_batch_seq, Corpus, CounterRng, DecompositionConfig,
};

fn setup(corpus_size: usize, n_test: usize, d_h: usize) -> (Corpus, Vec<Vec<f64>>) {
    let mut rng = CounterRng::new(2024);
    let latents: Vec<Vec<f64>> = (0..corpus_size)
        .map(|_| (0..d_h).map(|_| rng.normal()).collect())
        .collect();
    let corpus = Corpus::from_latents(latents).unwrap();
    let tests: Vec<Vec<f64>> = (0..n_test)
        .map(|_| (0..d_h).map(|_| rng.normal()).collect())
        .collect();
    (corpus, tests)
}

fn bench_batch(c: &mut Criterion) {
    let config = DecompositionConfig {
        steps: 300,
        ..DecompositionConfig::default()
    };
    let mut group = c.benchmark_group("batch_decomposition");
    group.sample_size(10);
    for &n_test in &[8usize, 32] {
        let (corpus, tests) = setup(50, n_test, 16);
        group.bench_with_input(
            BenchmarkId::new("parallel", n_test),
            &n_test,
            |b, _| b.iter(|| fit_decomposition_batch(&tests, &corpus, &config).unwrap()),
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", n_test),
            &n_test,
            |b, _| b.iter(|| fit_decomposition_batch_seq(&tests, &corpus, &config).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);

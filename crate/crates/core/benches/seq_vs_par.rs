//! Sequential vs rayon execution of the data-parallel kernels.
//!
//! `cargo bench --bench seq_vs_par`. Without the `parallel` feature both
//! variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cwb::closed_form::{assemble_spmi_solution, objective_value, solve_pairs};
use cwb::convex::{build_examples, noise_probabilities, ContextMode, ContextSpec, ConvexProblem, Noise, Objective};
use cwb::corpus::{build_vocabulary, count_cooccurrences, CooccurrenceStats, Vocabulary, WindowSpec};
use cwb::factorization::{truncated_svd, weighted_factorize, WeightedFactorizationProblem};
use cwb::loss::LossKind;
use cwb::par::{with_execution, Execution};
use cwb::pmi::{build_matrix, PmiVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus(words: usize, docs: usize, len: usize) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..docs)
        .map(|_| {
            (0..len)
                .map(|_| {
                    // roughly Zipfian ids
                    let u: f64 = rng.gen_range(0.0..1.0);
                    format!("w{}", ((words as f64).powf(u) as usize).min(words - 1))
                })
                .collect()
        })
        .collect()
}

fn setup() -> (Vec<Vec<String>>, Vocabulary, CooccurrenceStats) {
    let docs = corpus(400, 200, 500);
    let vocab = build_vocabulary(docs.iter().flatten(), 1).unwrap();
    let stats = count_cooccurrences(&docs, &vocab, &WindowSpec::symmetric_window(4).unwrap(), 0).unwrap();
    (docs, vocab, stats)
}

fn kernels(c: &mut Criterion) {
    let (docs, vocab, stats) = setup();
    let labels = vocab.words().to_vec();
    let window = WindowSpec::symmetric_window(4).unwrap();
    let pair = assemble_spmi_solution(&stats, &labels, LossKind::Squared, 2.0).unwrap();
    let sppmi = build_matrix(&stats, PmiVariant::Sppmi, 2.0).unwrap();
    let mut als = WeightedFactorizationProblem::from_pair_solutions(&stats, LossKind::Squared, 2.0, true, 20).unwrap();
    als.epochs = 3;
    als.tolerance = 0.0;
    let small_docs = corpus(100, 50, 200);
    let small_vocab = build_vocabulary(small_docs.iter().flatten(), 1).unwrap();
    let encoded: Vec<Vec<usize>> = small_docs.iter().map(|d| small_vocab.encode(d)).collect();
    let spec = ContextSpec::new(ContextMode::Bag, window.clone()).unwrap();
    let convex = ConvexProblem::from_examples(
        &build_examples(&encoded, &spec, &small_vocab),
        small_vocab.len(),
        small_vocab.len(),
        Objective::NegativeSampling,
        noise_probabilities(&small_vocab, Noise::Unigram),
        5.0,
    )
    .unwrap();
    let w0 = vec![0.01; small_vocab.len() * small_vocab.len()];

    let mut group = c.benchmark_group("seq_vs_par");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::new("count_cooccurrences", name), |b| {
            b.iter(|| {
                with_execution(mode, || {
                    count_cooccurrences(black_box(&docs), &vocab, &window, 0).unwrap()
                })
            })
        });
        group.bench_function(BenchmarkId::new("solve_pairs", name), |b| {
            b.iter(|| {
                with_execution(mode, || {
                    solve_pairs(black_box(&stats), LossKind::Logistic, 2.0, true).unwrap()
                })
            })
        });
        group.bench_function(BenchmarkId::new("objective_value", name), |b| {
            b.iter(|| {
                with_execution(mode, || {
                    objective_value(&pair.words, &pair.contexts, black_box(&stats), LossKind::Squared, 2.0).unwrap()
                })
            })
        });
        group.bench_function(BenchmarkId::new("truncated_svd", name), |b| {
            b.iter(|| with_execution(mode, || truncated_svd(black_box(&sppmi), 20, 3).unwrap()))
        });
        group.bench_function(BenchmarkId::new("weighted_als", name), |b| {
            b.iter(|| with_execution(mode, || weighted_factorize(black_box(&als), 3).unwrap()))
        });
        group.bench_function(BenchmarkId::new("convex_gradient", name), |b| {
            b.iter(|| with_execution(mode, || convex.loss_and_gradient(black_box(&w0))))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);

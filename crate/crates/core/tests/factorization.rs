mod common;

use cwb::closed_form::solve_pairs;
use cwb::corpus::{build_vocabulary, count_cooccurrences, tokenize, CooccurrenceStats, WindowSpec};
use cwb::factorization::*;
use cwb::loss::LossKind;
use cwb::pmi::{build_matrix, Implicit, PmiVariant, SparseMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn dense(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
}

#[test]
fn sparse_truncation_matches_jacobi_oracle() {
    let mut rng = common::rng(1);
    let n = 50;
    let mut entries = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if rng.gen_bool(0.15) {
                entries.push((r as u32, c as u32, rng.gen_range(-2.0..2.0)));
            }
        }
    }
    let m = SparseMatrix::new(n, n, entries, Implicit::Zero).unwrap();
    let d = 10;
    let svd = truncated_svd(&m, d, 7).unwrap();
    assert!(svd.orthonormality_error() < 1e-8);
    let full = m.to_dense().unwrap();
    let residual = (&full - svd.reconstruct()).norm();
    let rows: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| full[(r, c)]).collect()).collect();
    let best = common::truncation_residual(&common::jacobi_singular_values(&rows), d);
    assert!((residual - best).abs() <= 1e-5 * best, "{residual} vs {best}");
}

#[test]
fn dense_svd_agrees_with_jacobi() {
    let mut rng = common::rng(2);
    let rows = common::random_dense(&mut rng, 12, 7);
    let ours = dense_svd(&dense(&rows)).sigma;
    let oracle = common::jacobi_singular_values(&rows);
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn full_rank_plain_vectors_are_consistent() {
    let mut rng = common::rng(3);
    for _ in 0..5 {
        let m = SparseMatrix::from_dense(&dense(&common::random_dense(&mut rng, 20, 20)));
        assert!(consistency_report(&m, Flavor::Plain).unwrap() <= 1e-6);
        assert!(consistency_report(&m, Flavor::Symmetric).unwrap() > 1e-3);
    }
}

#[test]
fn unweighted_als_reaches_svd_residual_with_spectral_gap() {
    // 20x20 with singular values 10..6 then 1..0.1: a clear gap after 5
    let mut rng = common::rng(4);
    let q1 = dense(&common::random_dense(&mut rng, 20, 20)).qr().q();
    let q2 = dense(&common::random_dense(&mut rng, 20, 20)).qr().q();
    let sv: Vec<f64> = (0..20)
        .map(|i| {
            if i < 5 {
                10.0 - i as f64
            } else {
                1.0 - 0.045 * (i - 5) as f64
            }
        })
        .collect();
    let x = &q1 * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sv.clone())) * q2.transpose();
    let ones = DMatrix::from_element(20, 20, 1.0);
    let mut p = WeightedFactorizationProblem::from_dense(&x, &ones, 5).unwrap();
    p.ridge = 0.0;
    p.epochs = 2000;
    p.tolerance = 1e-14;
    let fit = weighted_factorize(&p, 1).unwrap();
    let best = 0.5 * sv[5..].iter().map(|s| s * s).sum::<f64>();
    assert!(
        (fit.objective() - best).abs() <= 1e-6 * best.max(1.0),
        "{} vs {best}",
        fit.objective()
    );
}

#[test]
fn full_dimension_interpolates_logistic_targets() {
    let mut rng = common::rng(5);
    let n = 30;
    let entries: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|w| (0..n).map(move |c| (w, c)))
        .map(|(w, c)| (w, c, rng.gen_range(1.0..50.0)))
        .collect();
    let stats = CooccurrenceStats::from_entries(n, entries).unwrap();
    let mut p = WeightedFactorizationProblem::from_pair_solutions(&stats, LossKind::Logistic, 2.0, false, n).unwrap();
    p.ridge = 1e-9;
    p.epochs = 500;
    let fit = weighted_factorize(&p, 2).unwrap();
    // the ridge part depends on how the scale is split between W and C
    assert!(fit.fit < 1e-8, "{}", fit.fit);
}

#[test]
fn logistic_targets_with_absent_pairs_are_refused() {
    let stats = CooccurrenceStats::from_entries(2, vec![(0, 1, 3.0), (1, 0, 3.0), (0, 0, 1.0)]).unwrap();
    let err = WeightedFactorizationProblem::from_pair_solutions(&stats, LossKind::Logistic, 1.0, true, 1).unwrap_err();
    assert_eq!(err.category(), "marker-contamination");
    assert!(WeightedFactorizationProblem::from_pair_solutions(&stats, LossKind::Hinge, 1.0, false, 1).is_err());
}

#[test]
fn sppmi_support_is_the_positive_condition_set() {
    let text = "the cat sat on the mat\nthe dog sat on the log\na cat and a dog\nthe cat ran\n";
    let docs = tokenize(text);
    let vocab = build_vocabulary(docs.iter().flatten(), 1).unwrap();
    let stats = count_cooccurrences(&docs, &vocab, &WindowSpec::symmetric_window(2).unwrap(), 0).unwrap();
    for k in [1.0, 2.0, 5.0] {
        let m = build_matrix(&stats, PmiVariant::Sppmi, k).unwrap();
        let support: Vec<(u32, u32)> = m.entries().iter().map(|e| (e.0, e.1)).collect();
        let positive: Vec<(u32, u32)> = solve_pairs(&stats, LossKind::Logistic, k, false)
            .unwrap()
            .into_iter()
            .filter(|(_, _, s)| s.pos_condition)
            .map(|(w, c, _)| (w as u32, c as u32))
            .collect();
        assert_eq!(support, positive, "k = {k}");
    }
}

#[test]
fn als_into_embedding_pair() {
    let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
    let p = WeightedFactorizationProblem::from_dense(&t, &DMatrix::from_element(2, 2, 1.0), 2).unwrap();
    let fit = weighted_factorize(&p, 0).unwrap();
    let pair = fit.into_embedding_pair(&["x".into(), "y".into()]).unwrap();
    assert_eq!(pair.dim(), 2);
    let got = pair.words.dot_with_markers(0, &pair.contexts, 1).unwrap();
    assert!((got - 0.5).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn svd_factors_are_orthonormal_and_sorted(
        seed in any::<u64>(),
        rows in 2usize..15,
        cols in 2usize..15,
        density in 0.05f64..1.0,
    ) {
        let mut rng = common::rng(seed);
        let mut entries = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if rng.gen_bool(density) {
                    entries.push((r as u32, c as u32, rng.gen_range(-3.0..3.0)));
                }
            }
        }
        let m = SparseMatrix::new(rows, cols, entries, Implicit::Zero).unwrap();
        let d = rng.gen_range(1..=rows.min(cols));
        let svd = truncated_svd(&m, d, seed).unwrap();
        prop_assert!(svd.orthonormality_error() < 1e-8);
        prop_assert!(svd.sigma.windows(2).all(|s| s[0] >= s[1]));
        prop_assert!(svd.sigma.iter().all(|s| *s >= 0.0));
    }

    #[test]
    fn als_objective_never_increases(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = common::rng(seed);
        let (r, c) = (rng.gen_range(2..9), rng.gen_range(2..9));
        let t = DMatrix::from_fn(r, c, |_, _| rng.gen_range(-2.0..2.0));
        let w = DMatrix::from_fn(r, c, |_, _| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..5.0) });
        let mut p = WeightedFactorizationProblem::from_dense(&t, &w, dim).unwrap();
        p.epochs = 40;
        let fit = weighted_factorize(&p, seed).unwrap();
        prop_assert!(fit.history.windows(2).all(|h| h[1] <= h[0] + 1e-9 * h[0].max(1.0)));
    }
}

//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's numerical code.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sig(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Losses written out independently: (name, dL/dx at margin m for label y).
pub fn loss_slope(name: &str, x: f64, y: f64) -> f64 {
    let m = y * x;
    match name {
        "logistic" => -y * sig(-m),
        "squared" => x - y,
        "squared-hinge" => {
            if m < 1.0 {
                -y * (1.0 - m)
            } else {
                0.0
            }
        }
        "hinge" => {
            if m <= 1.0 {
                -y
            } else {
                0.0
            }
        }
        "huber" => {
            if m < -1.0 {
                -2.0 * y
            } else if m < 1.0 {
                -y * (1.0 - m)
            } else {
                0.0
            }
        }
        other => panic!("unknown loss {other}"),
    }
}

pub fn loss_value(name: &str, x: f64, y: f64) -> f64 {
    let m = y * x;
    match name {
        "logistic" => (1.0 + (-m).exp()).ln(),
        "squared" => 0.5 * (x - y).powi(2),
        "squared-hinge" => 0.5 * (1.0 - m).max(0.0).powi(2),
        "hinge" => (1.0 - m).max(0.0),
        "huber" => {
            if m < -1.0 {
                -2.0 * m
            } else {
                0.5 * (1.0 - m).max(0.0).powi(2)
            }
        }
        other => panic!("unknown loss {other}"),
    }
}

/// Minimizer of pos·L(x,+1) + neg·L(x,-1) by bisection on the slope over
/// [-64, 64]; `None` when the slope never turns positive-from-negative.
pub fn minimize_pair(name: &str, pos: f64, neg: f64) -> Option<f64> {
    let slope = |x: f64| pos * loss_slope(name, x, 1.0) + neg * loss_slope(name, x, -1.0);
    let (mut lo, mut hi) = (-64.0f64, 64.0f64);
    if slope(lo) > 0.0 || slope(hi) <= 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Root of λx = (e^pmi - k e^x)/(1 + e^x) by plain bisection.
pub fn l2_root(pmi: f64, k: f64, lambda: f64) -> f64 {
    let f = |x: f64| (pmi.exp() - k * x.exp()) / (1.0 + x.exp()) - lambda * x;
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of e^pmi·ln(1+e^-x) + k·ln(1+e^x) + λ|x| via its
/// subgradient: zero when |h(0)| <= λ, otherwise bisection on the side
/// given by the sign of h(0).
pub fn l1_minimizer(pmi: f64, k: f64, lambda: f64) -> f64 {
    let h = |x: f64| pmi.exp() * sig(-x) - k * sig(x);
    let h0 = h(0.0);
    if h0.abs() <= lambda {
        return 0.0;
    }
    let (target, mut lo, mut hi) = if h0 > 0.0 {
        (lambda, 0.0, 60.0)
    } else {
        (-lambda, -60.0, 0.0)
    };
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn jacobi_singular_values(a: &[Vec<f64>]) -> Vec<f64> {
    let rows = a.len();
    let cols = a[0].len();
    // work on columns of the taller orientation
    let (m, n, mut u): (usize, usize, Vec<Vec<f64>>) = if rows >= cols {
        (
            rows,
            cols,
            (0..cols).map(|j| (0..rows).map(|i| a[i][j]).collect()).collect(),
        )
    } else {
        (cols, rows, a.to_vec())
    };
    for _sweep in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = (0..m).map(|r| u[i][r] * u[i][r]).sum();
                let beta: f64 = (0..m).map(|r| u[j][r] * u[j][r]).sum();
                let gamma: f64 = (0..m).map(|r| u[i][r] * u[j][r]).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let (x, y) = (u[i][r], u[j][r]);
                    u[i][r] = c * x - s * y;
                    u[j][r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = u
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Best rank-d Frobenius residual from the singular values.
pub fn truncation_residual(sv: &[f64], d: usize) -> f64 {
    sv[d..].iter().map(|s| s * s).sum::<f64>().sqrt()
}

pub fn random_dense(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Pearson correlation of ranks; ties share the mean of their positions.
/// Ranks are found by counting, O(n²).
pub fn spearman_reference(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Fixed 500-token corpus over a skewed 12-word vocabulary, 10 lines of 50.
pub fn toy_corpus_500() -> String {
    let words = [
        "the", "cat", "sat", "on", "mat", "dog", "ran", "to", "a", "red", "big", "ball",
    ];
    let weights: Vec<f64> = (1..=words.len()).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut r = rng(500);
    let mut lines = Vec::new();
    for _ in 0..10 {
        let line: Vec<&str> = (0..50)
            .map(|_| {
                let mut u = r.gen_range(0.0..total);
                for (w, p) in words.iter().zip(&weights) {
                    if u < *p {
                        return *w;
                    }
                    u -= p;
                }
                words[words.len() - 1]
            })
            .collect();
        lines.push(line.join(" "));
    }
    lines.join("\n") + "\n"
}

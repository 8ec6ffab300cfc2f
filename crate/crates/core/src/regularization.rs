//! L2- and L1-regularized per-pair solutions of the logistic pair objective
//!
//! ```text
//! e^pmi·ln(1 + e^-x) + k·ln(1 + e^x) + λ·R(x)
//! ```
//!
//! whose stationarity condition is `λ·R'(x) = h(x)` with
//! `h(x) = (e^pmi - k·e^x) / (1 + e^x)`. An absent pair (pmi = -inf) is
//! handled as e^pmi = 0.

use std::fmt;
use std::str::FromStr;

use crate::corpus::CooccurrenceStats;
use crate::error::{Error, Result};
use crate::loss::sigmoid;
use crate::par;
use crate::pmi::{check_k, pmi_value, Implicit, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegKind {
    L2,
    L1,
}

impl FromStr for RegKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(RegKind::L2),
            "l1" => Ok(RegKind::L1),
            _ => Err(Error::InvalidConfig(format!("unknown regularizer `{s}`"))),
        }
    }
}

impl fmt::Display for RegKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegKind::L2 => "l2",
            RegKind::L1 => "l1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegSpec {
    pub kind: RegKind,
    pub lambda: f64,
    pub k: f64,
}

impl RegSpec {
    pub fn new(kind: RegKind, lambda: f64, k: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_k(k)?;
        Ok(RegSpec { kind, lambda, k })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("lambda must be positive, got {lambda}")))
    }
}

/// (e^pmi - k·e^x) / (1 + e^x), evaluated without overflow.
pub fn h_function(pmi: f64, k: f64, x: f64) -> f64 {
    let exp_pmi = pmi.exp();
    let lhs = if exp_pmi == 0.0 { 0.0 } else { exp_pmi * sigmoid(-x) };
    lhs - k * sigmoid(x)
}

/// Chord (linearized) L2 solution A·B/(A+B) with A = pmi - ln k and
/// B = (e^pmi - k)/(2λ). Requires pmi > ln k.
pub fn solve_l2(pmi: f64, k: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_k(k)?;
    let a = pmi - k.ln();
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!(
            "chord solution needs pmi > ln k (pmi={pmi}, k={k}); use the exact solver"
        )));
    }
    let b = (pmi.exp() - k) / (2.0 * lambda);
    if b.is_infinite() {
        return Ok(a);
    }
    Ok(a * b / (a + b))
}

/// Exact three-case L1 solution.
pub fn solve_l1(pmi: f64, k: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_k(k)?;
    let e = pmi.exp();
    let h0 = (e - k) / 2.0;
    if h0.abs() <= lambda {
        Ok(0.0)
    } else if h0 > lambda {
        Ok(((e - lambda) / (k + lambda)).ln())
    } else if lambda < k {
        Ok(((e + lambda) / (k - lambda)).ln())
    } else {
        Err(Error::Domain(format!(
            "negative-side L1 solution needs lambda < k (lambda={lambda}, k={k})"
        )))
    }
}

/// Bisection solution of the regularized stationarity condition, used to
/// validate the closed forms.
pub fn solve_exact(pmi: f64, k: f64, lambda: f64, kind: RegKind) -> Result<f64> {
    check_lambda(lambda)?;
    check_k(k)?;
    match kind {
        // h(x) - λx is strictly decreasing with a single crossing
        RegKind::L2 => Ok(decreasing_root(|x| h_function(pmi, k, x) - lambda * x)),
        RegKind::L1 => {
            let h0 = h_function(pmi, k, 0.0);
            if h0.abs() <= lambda {
                Ok(0.0)
            } else if h0 > lambda {
                Ok(decreasing_root(|x| h_function(pmi, k, x) - lambda))
            } else if h0 < -lambda && lambda < k {
                Ok(decreasing_root(|x| h_function(pmi, k, x) + lambda))
            } else {
                Err(Error::Domain(format!(
                    "no negative-side L1 solution for lambda={lambda} >= k={k}"
                )))
            }
        }
    }
}

/// Root of a strictly decreasing function that changes sign somewhere on
/// the real line.
fn decreasing_root(f: impl Fn(f64) -> f64) -> f64 {
    let f0 = f(0.0);
    if f0 == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = if f0 > 0.0 { (0.0, 1.0) } else { (-1.0, 0.0) };
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while f(lo) < 0.0 {
        hi = lo;
        lo *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RegMethod {
    /// Chord formula for L2 (falling back to bisection where it does not
    /// apply), three-case formula for L1.
    #[default]
    ClosedForm,
    Exact,
}

impl FromStr for RegMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" | "closed" => Ok(RegMethod::ClosedForm),
            "exact" => Ok(RegMethod::Exact),
            _ => Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

impl fmt::Display for RegMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegMethod::ClosedForm => "closed-form",
            RegMethod::Exact => "exact",
        })
    }
}

/// How the user-facing λ relates to the per-pair λ above.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RegWeighting {
    /// Regularizer weighted by #(w,.)·#(.,c)/|D|; after normalizing the pair
    /// objective by that factor the per-pair λ equals the given λ.
    #[default]
    CountScaled,
    /// Unweighted λ·R(x); the per-pair λ becomes λ·|D|/(#(w,.)·#(.,c)).
    Uniform,
}

impl FromStr for RegWeighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count-scaled" => Ok(RegWeighting::CountScaled),
            "uniform" => Ok(RegWeighting::Uniform),
            _ => Err(Error::InvalidConfig(format!("unknown weighting `{s}`"))),
        }
    }
}

impl fmt::Display for RegWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegWeighting::CountScaled => "count-scaled",
            RegWeighting::Uniform => "uniform",
        })
    }
}

/// Per-pair effective λ for a pair with marginals `n_w`, `n_c`.
pub fn effective_lambda(lambda: f64, weighting: RegWeighting, n_w: f64, n_c: f64, total: f64) -> f64 {
    match weighting {
        RegWeighting::CountScaled => lambda,
        RegWeighting::Uniform => lambda * total / (n_w * n_c),
    }
}

/// Solve one pair with the given regularizer.
pub fn solve_regularized(pmi: f64, spec: RegSpec, lambda: f64, method: RegMethod) -> Result<f64> {
    match (spec.kind, method) {
        (_, RegMethod::Exact) => solve_exact(pmi, spec.k, lambda, spec.kind),
        (RegKind::L1, RegMethod::ClosedForm) => solve_l1(pmi, spec.k, lambda),
        (RegKind::L2, RegMethod::ClosedForm) => {
            if pmi > spec.k.ln() {
                solve_l2(pmi, spec.k, lambda)
            } else {
                solve_exact(pmi, spec.k, lambda, RegKind::L2)
            }
        }
    }
}

/// Regularized solution matrix over every (w, c) with nonzero marginals,
/// absent pairs included. Zeros are not stored.
pub fn regularized_matrix(
    stats: &CooccurrenceStats,
    spec: RegSpec,
    weighting: RegWeighting,
    method: RegMethod,
) -> Result<SparseMatrix> {
    let n = stats.num_words();
    let rows = par::map_range(n, |w| -> Result<Vec<(u32, u32, f64)>> {
        let n_w = stats.row_marginal(w);
        if n_w == 0.0 {
            return Ok(Vec::new());
        }
        let mut row = Vec::new();
        for c in 0..n {
            let n_c = stats.col_marginal(c);
            if n_c == 0.0 {
                continue;
            }
            let pmi = pmi_value(stats, w, c).unwrap_or(f64::NEG_INFINITY);
            let lambda = effective_lambda(spec.lambda, weighting, n_w, n_c, stats.total());
            let x = solve_regularized(pmi, spec, lambda, method)?;
            if x != 0.0 {
                row.push((w as u32, c as u32, x));
            }
        }
        Ok(row)
    });
    let entries = rows.into_iter().collect::<Result<Vec<_>>>()?.concat();
    SparseMatrix::new(n, n, entries, Implicit::Zero)
}

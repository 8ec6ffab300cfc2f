//! Co-occurrence-format objective and its per-pair closed-form minimizers.
//!
//! With A = #(w,c) and B = k·#(w,.)·#(.,c)/|D| the per-pair objective is
//! `A·L(x,+1) + B·L(x,-1)`. Everything here is written in terms of A and B;
//! e^PMI/k equals A/B.

use crate::corpus::CooccurrenceStats;
use crate::embedding::{Embedding, Score};
use crate::error::{Error, Result};
use crate::loss::{sigmoid, Label, LossKind};
use crate::par;
use crate::pmi::check_k;

/// Counts entering one pair objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCounts {
    /// #(w,c)
    pub joint: f64,
    /// #(w,.)
    pub word: f64,
    /// #(.,c)
    pub context: f64,
    /// |D|
    pub total: f64,
}

impl PairCounts {
    pub fn new(joint: f64, word: f64, context: f64, total: f64) -> Self {
        PairCounts {
            joint,
            word,
            context,
            total,
        }
    }

    pub fn from_stats(stats: &CooccurrenceStats, w: usize, c: usize) -> Self {
        PairCounts::new(
            stats.get(w, c),
            stats.row_marginal(w),
            stats.col_marginal(c),
            stats.total(),
        )
    }

    /// k·#(w,.)·#(.,c)/|D|
    pub fn negative_weight(&self, k: f64) -> f64 {
        k * self.word * self.context / self.total
    }

    pub fn pmi(&self) -> Option<f64> {
        crate::pmi::pmi_from_counts(self.joint, self.word, self.context, self.total)
    }
}

/// `#(w,c)·L(x,+1) + k·#(w,.)·#(.,c)/|D|·L(x,-1)`. Terms with a zero
/// coefficient are dropped, so infinite `x` is allowed where the limit is
/// finite.
pub fn pair_objective(kind: LossKind, counts: PairCounts, k: f64, x: f64) -> f64 {
    weighted_objective(kind, counts.joint, counts.negative_weight(k), x)
}

pub(crate) fn weighted_objective(kind: LossKind, pos: f64, neg: f64, x: f64) -> f64 {
    let mut v = 0.0;
    if pos != 0.0 {
        v += pos * kind.value(x, Label::Pos);
    }
    if neg != 0.0 {
        v += neg * kind.value(x, Label::Neg);
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSolution {
    pub x_star: Score,
    /// Curvature at the minimizer; `None` for hinge.
    pub alpha: Option<f64>,
    /// #(w,c) + k·#(w,.)·#(.,c)/|D|
    pub delta: f64,
    /// PMI > ln k
    pub pos_condition: bool,
}

pub fn solve_pair(kind: LossKind, counts: PairCounts, k: f64) -> Result<PairSolution> {
    check_k(k)?;
    if !(counts.word > 0.0 && counts.context > 0.0 && counts.total > 0.0) {
        return Err(Error::DegenerateMarginal { w: 0, c: 0 });
    }
    if counts.joint < 0.0 {
        return Err(Error::Domain(format!("negative pair count {}", counts.joint)));
    }
    let pos = counts.joint;
    let neg = counts.negative_weight(k);
    let delta = pos + neg;
    let pos_condition = pos > neg;
    let (x_star, alpha) = match kind {
        LossKind::Logistic => {
            if pos == 0.0 {
                (Score::NegInf, Some(0.0))
            } else {
                let x = (pos / neg).ln();
                (Score::Finite(x), Some(sigmoid(x) * sigmoid(-x) * delta))
            }
        }
        LossKind::Squared | LossKind::SquaredHinge | LossKind::Huber => {
            (Score::Finite((pos - neg) / (pos + neg)), Some(delta))
        }
        LossKind::Hinge => (Score::Finite(if pos >= neg { 1.0 } else { -1.0 }), None),
    };
    Ok(PairSolution {
        x_star,
        alpha,
        delta,
        pos_condition,
    })
}

/// Minimizer of the pair objective by bisection on its (left) derivative,
/// which is non-decreasing in x. `None` when the infimum is only reached
/// at -inf (logistic with #(w,c) = 0).
pub fn bisect_pair_minimizer(kind: LossKind, counts: PairCounts, k: f64) -> Option<f64> {
    let pos = counts.joint;
    let neg = counts.negative_weight(k);
    if kind == LossKind::Logistic && pos == 0.0 {
        return None;
    }
    let slope = |x: f64| pos * kind.derivative(x, Label::Pos) + neg * kind.derivative(x, Label::Neg);
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while slope(lo) > 0.0 {
        lo *= 2.0;
        if lo < -1e6 {
            return None;
        }
    }
    while slope(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Some(hi);
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

fn solve_at(stats: &CooccurrenceStats, kind: LossKind, k: f64, w: usize, c: usize) -> Result<PairSolution> {
    solve_pair(kind, PairCounts::from_stats(stats, w, c), k).map_err(|e| match e {
        Error::DegenerateMarginal { .. } => Error::DegenerateMarginal { w, c },
        other => other,
    })
}

/// Solutions for the stored pairs, plus every absent pair with nonzero
/// marginals when `include_absent` is set. Sorted by (w, c).
pub fn solve_pairs(
    stats: &CooccurrenceStats,
    kind: LossKind,
    k: f64,
    include_absent: bool,
) -> Result<Vec<(usize, usize, PairSolution)>> {
    check_k(k)?;
    let n = stats.num_words();
    let rows = par::map_range(n, |w| -> Result<Vec<(usize, usize, PairSolution)>> {
        let cols: Vec<usize> = if include_absent {
            if stats.row_marginal(w) == 0.0 {
                return Ok(Vec::new());
            }
            (0..n).filter(|&c| stats.col_marginal(c) > 0.0).collect()
        } else {
            let pairs = stats.pairs();
            let lo = pairs.partition_point(|p| (p.0 as usize) < w);
            let hi = pairs.partition_point(|p| (p.0 as usize) <= w);
            pairs[lo..hi].iter().map(|p| p.1 as usize).collect()
        };
        cols.into_iter()
            .map(|c| Ok((w, c, solve_at(stats, kind, k, w, c)?)))
            .collect()
    });
    Ok(rows
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect())
}

/// Word and context vectors of a factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingPair {
    pub words: Embedding,
    pub contexts: Embedding,
}

impl EmbeddingPair {
    pub fn new(words: Embedding, contexts: Embedding) -> Result<Self> {
        if words.dim() != contexts.dim() || words.len() != contexts.len() {
            return Err(Error::DimensionMismatch(format!(
                "word vectors {}x{} vs context vectors {}x{}",
                words.len(),
                words.dim(),
                contexts.len(),
                contexts.dim()
            )));
        }
        Ok(EmbeddingPair { words, contexts })
    }

    pub fn dim(&self) -> usize {
        self.words.dim()
    }

    /// Swap word and context roles.
    pub fn swapped(&self) -> Self {
        EmbeddingPair {
            words: self.contexts.clone(),
            contexts: self.words.clone(),
        }
    }
}

/// Closed-form minimizer with one-hot context vectors: C = I and
/// W[w][c] = x*(w,c). Absent pairs take the zero-count solution.
pub fn assemble_spmi_solution(
    stats: &CooccurrenceStats,
    labels: &[String],
    kind: LossKind,
    k: f64,
) -> Result<EmbeddingPair> {
    check_k(k)?;
    let n = stats.num_words();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {n} words",
            labels.len()
        )));
    }
    if stats.is_empty() {
        return Err(Error::Domain("co-occurrence table is empty".into()));
    }
    let rows = par::map_range(n, |w| -> Result<Vec<Score>> {
        (0..n).map(|c| Ok(solve_at(stats, kind, k, w, c)?.x_star)).collect()
    });
    let scores: Vec<Score> = rows.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let words = Embedding::from_scores(labels.to_vec(), n, &scores)?;
    EmbeddingPair::new(words, Embedding::one_hot(labels.to_vec()))
}

/// Total co-occurrence-format objective at x(w,c) = W[w]·C[c], summed over
/// every (w,c) with nonzero weight (not only stored pairs).
pub fn objective_value(
    words: &Embedding,
    contexts: &Embedding,
    stats: &CooccurrenceStats,
    kind: LossKind,
    k: f64,
) -> Result<f64> {
    check_k(k)?;
    let n = stats.num_words();
    if words.len() != n || contexts.len() != n || words.dim() != contexts.dim() {
        return Err(Error::DimensionMismatch(format!(
            "W {}x{}, C {}x{}, {n} words",
            words.len(),
            words.dim(),
            contexts.len(),
            contexts.dim()
        )));
    }
    if stats.total() <= 0.0 {
        return Err(Error::Domain("co-occurrence table is empty".into()));
    }
    let rows = par::map_range(n, |w| -> Result<f64> {
        let n_w = stats.row_marginal(w);
        if n_w == 0.0 {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        for c in 0..n {
            let counts = PairCounts::from_stats(stats, w, c);
            if counts.joint == 0.0 && counts.context == 0.0 {
                continue;
            }
            let x = words.dot_with_markers(w, contexts, c)?;
            sum += pair_objective(kind, counts, k, x);
        }
        Ok(sum)
    });
    rows.into_iter().sum()
}

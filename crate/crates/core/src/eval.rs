//! Nearest neighbours, word-pair similarity correlation and cross-model
//! dot-product comparison.
//!
//! Marked (negative infinity) cells count as absent, i.e. 0, in every dot
//! product computed here.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::par;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    #[default]
    Cosine,
    Dot,
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "dot" => Ok(Metric::Dot),
            _ => Err(Error::InvalidConfig(format!("unknown metric `{s}`"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Cosine => "cosine",
            Metric::Dot => "dot",
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Similarity of two rows; `None` for cosine with a zero vector.
pub fn similarity(model: &Embedding, a: usize, b: usize, metric: Metric) -> Option<f64> {
    let (x, y) = (model.row(a), model.row(b));
    match metric {
        Metric::Dot => Some(dot(x, y)),
        Metric::Cosine => {
            let n = norm(x) * norm(y);
            (n > 0.0).then(|| dot(x, y) / n)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub word: String,
    pub score: f64,
}

pub fn neighbors(model: &Embedding, word: &str, n: usize, metric: Metric) -> Result<Vec<Neighbor>> {
    let q = model.find(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    if metric == Metric::Cosine && norm(model.row(q)) == 0.0 {
        return Ok(Vec::new());
    }
    let scores = par::map_range(model.len(), |i| {
        if i == q {
            None
        } else {
            similarity(model, q, i, metric).map(|s| (i, s))
        }
    });
    let mut ranked: Vec<(usize, f64)> = scores.into_iter().flatten().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .take(n)
        .map(|(id, score)| Neighbor {
            id,
            word: model.label(id).to_string(),
            score,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    rows: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    pub fn new(rows: Vec<(String, String, f64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (a, b, s) in &rows {
            if !s.is_finite() {
                return Err(Error::Domain(format!("score for ({a}, {b}) is not finite")));
            }
            let key = if a <= b { (a, b) } else { (b, a) };
            if !seen.insert(key) {
                return Err(Error::Domain(format!("duplicate pair ({a}, {b})")));
            }
        }
        Ok(SimilarityDataset { rows })
    }

    pub fn rows(&self) -> &[(String, String, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `word1<TAB>word2<TAB>score` per line; `#` lines and blanks skipped.
    pub fn parse_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [a, b, s] = fields.as_slice() else {
                return Err(Error::parse(origin, i + 1, "expected word1<TAB>word2<TAB>score"));
            };
            let score = s
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, format!("bad score `{s}`")))?;
            rows.push((a.trim().to_string(), b.trim().to_string(), score));
        }
        Self::new(rows).map_err(|e| match e {
            Error::Domain(msg) => Error::parse(origin, 0, msg),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_tsv(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpearmanReport {
    pub correlation: f64,
    pub coverage: f64,
    pub scored: usize,
    pub total: usize,
}

pub fn spearman(model: &Embedding, ds: &SimilarityDataset, metric: Metric) -> Result<SpearmanReport> {
    let mut model_scores = Vec::new();
    let mut human = Vec::new();
    for (a, b, s) in ds.rows() {
        let (Some(i), Some(j)) = (model.find(a), model.find(b)) else {
            continue;
        };
        if let Some(sim) = similarity(model, i, j, metric) {
            model_scores.push(sim);
            human.push(*s);
        }
    }
    if model_scores.len() < 2 {
        return Err(Error::InsufficientPairs(model_scores.len()));
    }
    Ok(SpearmanReport {
        correlation: pearson(&average_ranks(&model_scores), &average_ranks(&human)),
        coverage: model_scores.len() as f64 / ds.len() as f64,
        scored: model_scores.len(),
        total: ds.len(),
    })
}

/// Dot products of all row pairs; markers read as 0.
pub fn gram(model: &Embedding) -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(model.len(), model.dim(), model.values());
    &m * m.transpose()
}

/// max |G_a - G_b| over word pairs present in both models, matched by
/// label. Returns the gap and the number of shared words.
pub fn gram_gap(a: &Embedding, b: &Embedding) -> Result<(f64, usize)> {
    let shared: Vec<(usize, usize)> = (0..a.len())
        .filter_map(|i| b.find(a.label(i)).map(|j| (i, j)))
        .collect();
    if shared.is_empty() {
        return Err(Error::DimensionMismatch("models share no words".into()));
    }
    let rows = par::map_slice(&shared, |&(i, j)| {
        shared
            .iter()
            .map(|&(k, l)| (dot(a.row(i), a.row(k)) - dot(b.row(j), b.row(l))).abs())
            .fold(0.0, f64::max)
    });
    Ok((rows.into_iter().fold(0.0, f64::max), shared.len()))
}

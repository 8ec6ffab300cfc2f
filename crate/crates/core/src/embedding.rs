//! Dense labelled word vectors and their text format.
//!
//! ```text
//! # key=value            (provenance, optional)
//! num_words dim
//! word v1 v2 ... vd
//! ```
//!
//! Negative-infinity markers are written as `NEG_INF`.

use std::path::Path;

use nalgebra::DMatrix;

use crate::config::{split_provenance, RunConfig};
use crate::error::{Error, Result};

pub const NEG_INF_TOKEN: &str = "NEG_INF";

/// One cell of an embedding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Score {
    Finite(f64),
    NegInf,
}

impl Score {
    pub fn finite(self) -> Option<f64> {
        match self {
            Score::Finite(v) => Some(v),
            Score::NegInf => None,
        }
    }

    /// Plain float view; the marker becomes `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    labels: Vec<String>,
    dim: usize,
    /// Row-major; marked cells hold 0.
    values: Vec<f64>,
    /// Row-major marker mask, absent when no cell is marked.
    markers: Option<Vec<bool>>,
}

impl Embedding {
    pub fn zeros(labels: Vec<String>, dim: usize) -> Self {
        let n = labels.len();
        Embedding {
            labels,
            dim,
            values: vec![0.0; n * dim],
            markers: None,
        }
    }

    pub fn from_rows(labels: Vec<String>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} rows of dimension {dim}",
                values.len(),
                labels.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("embedding value {v} is not finite")));
        }
        Ok(Embedding {
            labels,
            dim,
            values,
            markers: None,
        })
    }

    pub fn from_scores(labels: Vec<String>, dim: usize, scores: &[Score]) -> Result<Self> {
        let values = scores.iter().map(|s| s.finite().unwrap_or(0.0)).collect();
        let mut e = Self::from_rows(labels, dim, values)?;
        if scores.contains(&Score::NegInf) {
            e.markers = Some(scores.iter().map(|s| *s == Score::NegInf).collect());
        }
        Ok(e)
    }

    pub fn from_matrix(labels: Vec<String>, m: &DMatrix<f64>) -> Result<Self> {
        if labels.len() != m.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                m.nrows()
            )));
        }
        let values = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)]))
            .collect();
        Self::from_rows(labels, m.ncols(), values)
    }

    /// Identity rows (one-hot vectors).
    pub fn one_hot(labels: Vec<String>) -> Self {
        let n = labels.len();
        let mut e = Self::zeros(labels, n);
        for i in 0..n {
            e.values[i * n + i] = 1.0;
        }
        e
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> &str {
        &self.labels[row]
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn has_markers(&self) -> bool {
        self.markers.is_some()
    }

    pub fn is_marked(&self, row: usize, col: usize) -> bool {
        self.markers.as_ref().is_some_and(|m| m[row * self.dim + col])
    }

    pub fn score(&self, row: usize, col: usize) -> Score {
        if self.is_marked(row, col) {
            Score::NegInf
        } else {
            Score::Finite(self.values[row * self.dim + col])
        }
    }

    /// Row values with markers read as 0 (entry absent).
    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.values[row * d..(row + 1) * d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn set(&mut self, row: usize, col: usize, score: Score) {
        let i = row * self.dim + col;
        match score {
            Score::Finite(v) => {
                self.values[i] = v;
                if let Some(m) = self.markers.as_mut() {
                    m[i] = false;
                }
            }
            Score::NegInf => {
                self.values[i] = 0.0;
                let len = self.values.len();
                self.markers.get_or_insert_with(|| vec![false; len])[i] = true;
            }
        }
    }

    /// Dense copy; fails on markers.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.has_markers() {
            return Err(Error::MarkerContamination);
        }
        Ok(DMatrix::from_row_slice(self.len(), self.dim, &self.values))
    }

    /// Score of `self[row]` against `other[col]`. A marked cell contributes
    /// -inf (or +inf) when paired with a positive (negative) coordinate and
    /// nothing when paired with zero.
    pub fn dot_with_markers(&self, row: usize, other: &Embedding, other_row: usize) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim, other.dim)));
        }
        let a = self.row(row);
        let b = other.row(other_row);
        let mut sum = 0.0;
        let mut neg_inf = false;
        let mut pos_inf = false;
        for j in 0..self.dim {
            let (ma, mb) = (self.is_marked(row, j), other.is_marked(other_row, j));
            if ma || mb {
                let partner = if ma { b[j] } else { a[j] };
                if ma && mb {
                    pos_inf = true;
                } else if partner > 0.0 {
                    neg_inf = true;
                } else if partner < 0.0 {
                    pos_inf = true;
                }
            } else {
                sum += a[j] * b[j];
            }
        }
        match (neg_inf, pos_inf) {
            (true, true) => Err(Error::Domain("score combines +inf and -inf".into())),
            (true, false) => Ok(f64::NEG_INFINITY),
            (false, true) => Ok(f64::INFINITY),
            _ => Ok(sum),
        }
    }

    pub fn to_text(&self, config: &RunConfig) -> String {
        let mut out = config.to_header();
        out.push_str(&format!("{} {}\n", self.len(), self.dim));
        for r in 0..self.len() {
            out.push_str(&self.labels[r]);
            for c in 0..self.dim {
                out.push(' ');
                match self.score(r, c) {
                    Score::Finite(v) => out.push_str(&v.to_string()),
                    Score::NegInf => out.push_str(NEG_INF_TOKEN),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str, origin: &str) -> Result<(RunConfig, Self)> {
        let (config, lines) = split_provenance(text);
        let mut lines = lines.into_iter().filter(|(_, l)| !l.trim().is_empty());
        let (hno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing `num_words dim` header"))?;
        let mut h = header.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(n)), Some(Ok(dim)), None) = (h.next(), h.next(), h.next()) else {
            return Err(Error::parse(origin, hno, "header must be `num_words dim`"));
        };
        let mut labels = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n * dim);
        for (no, line) in lines {
            let mut fields = line.split_whitespace();
            let label = fields.next().unwrap_or_default();
            labels.push(label.to_string());
            let before = scores.len();
            for tok in fields {
                scores.push(if tok == NEG_INF_TOKEN {
                    Score::NegInf
                } else {
                    Score::Finite(
                        tok.parse()
                            .map_err(|_| Error::parse(origin, no, format!("bad value `{tok}`")))?,
                    )
                });
            }
            if scores.len() - before != dim {
                return Err(Error::parse(
                    origin,
                    no,
                    format!("expected {dim} values, got {}", scores.len() - before),
                ));
            }
        }
        if labels.len() != n {
            return Err(Error::parse(
                origin,
                hno,
                format!("header says {n} rows, found {}", labels.len()),
            ));
        }
        Ok((config, Self::from_scores(labels, dim, &scores)?))
    }

    pub fn save(&self, path: &Path, config: &RunConfig) -> Result<()> {
        std::fs::write(path, self.to_text(config))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(RunConfig, Self)> {
        Self::parse_text(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn markers_serialize_as_token() {
        let mut e = Embedding::zeros(labels(2), 2);
        e.set(0, 1, Score::Finite(0.5));
        e.set(1, 0, Score::NegInf);
        let mut cfg = RunConfig::new();
        cfg.set("loss", "logistic");
        let text = e.to_text(&cfg);
        assert_eq!(text, "# loss=logistic\n2 2\nw0 0 0.5\nw1 NEG_INF 0\n");
        let (back_cfg, back) = Embedding::parse_text(&text, "e").unwrap();
        assert_eq!(back_cfg, cfg);
        assert_eq!(back, e);
        assert_eq!(back.to_matrix().unwrap_err().category(), "marker-contamination");
    }

    #[test]
    fn marker_dot_products() {
        let mut w = Embedding::zeros(labels(1), 3);
        w.set(0, 0, Score::NegInf);
        w.set(0, 1, Score::Finite(2.0));
        let c = Embedding::one_hot(labels(3));
        assert_eq!(w.dot_with_markers(0, &c, 0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(w.dot_with_markers(0, &c, 1).unwrap(), 2.0);
        assert_eq!(w.dot_with_markers(0, &c, 2).unwrap(), 0.0);
    }

    #[test]
    fn malformed_rows() {
        assert!(Embedding::parse_text("2 2\na 1 2\n", "e").is_err());
        assert!(Embedding::parse_text("1 2\na 1\n", "e").is_err());
        assert!(Embedding::parse_text("1 2\na 1 x\n", "e").is_err());
        assert!(Embedding::from_rows(labels(1), 2, vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn text_round_trip(rows in prop::collection::vec(prop::collection::vec(prop::option::of(-1e3f64..1e3), 3), 1..6)) {
            let n = rows.len();
            let scores: Vec<Score> = rows.into_iter().flatten().map(|v| v.map_or(Score::NegInf, Score::Finite)).collect();
            let e = Embedding::from_scores(labels(n), 3, &scores).unwrap();
            let (_, back) = Embedding::parse_text(&e.to_text(&RunConfig::new()), "e").unwrap();
            prop_assert_eq!(back, e);
        }
    }
}

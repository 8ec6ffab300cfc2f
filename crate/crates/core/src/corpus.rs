//! Tokenization, vocabulary building and weighted co-occurrence counting.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::par;
use crate::triplets::TripletFile;

/// Relative tolerance used by the consistency and symmetry checks.
pub const REL_TOL: f64 = 1e-9;

/// Documents per counting shard. Fixed so that results do not depend on
/// the number of worker threads.
const SHARD_DOCS: usize = 64;

/// Split UTF-8 text into documents (one per line) of whitespace tokens.
/// Empty lines produce no document.
pub fn tokenize(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|line| line.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
        .filter(|doc| !doc.is_empty())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    freq: Vec<u64>,
    total_tokens: u64,
}

/// Count tokens and keep those seen at least `min_count` times, ordered by
/// descending frequency with ties broken lexicographically.
pub fn build_vocabulary<I, S>(tokens: I, min_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let min_count = min_count.max(1);
    let mut counts: HashMap<String, u64> = HashMap::new();
    for tok in tokens {
        let tok = tok.as_ref();
        match counts.get_mut(tok) {
            Some(n) => *n += 1,
            None => {
                counts.insert(tok.to_owned(), 1);
            }
        }
    }
    let mut kept: Vec<(String, u64)> = counts.into_iter().filter(|(_, n)| *n >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from_counts(kept))
}

impl Vocabulary {
    fn from_counts(entries: Vec<(String, u64)>) -> Self {
        let total_tokens = entries.iter().map(|(_, n)| n).sum();
        let index = entries.iter().enumerate().map(|(i, (w, _))| (w.clone(), i)).collect();
        let (words, freq) = entries.into_iter().unzip();
        Vocabulary {
            words,
            index,
            freq,
            total_tokens,
        }
    }

    /// Vocabulary of `n` placeholder words named by their ids.
    pub fn placeholder(n: usize) -> Self {
        Self::from_counts((0..n).map(|i| (i.to_string(), 1)).collect())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn freq(&self, id: usize) -> u64 {
        self.freq[id]
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// freq(w) / total_tokens.
    pub fn relative_freq(&self, id: usize) -> f64 {
        self.freq[id] as f64 / self.total_tokens as f64
    }

    /// Map a document to ids, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, doc: &[S]) -> Vec<usize> {
        doc.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }

    /// `word<TAB>count` per line, ordered by id.
    pub fn to_tsv(&self) -> String {
        self.words
            .iter()
            .zip(&self.freq)
            .map(|(w, n)| format!("{w}\t{n}\n"))
            .collect()
    }

    pub fn from_tsv(text: &str, origin: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (w, n) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected word<TAB>count"))?;
            let n = n
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, format!("bad count `{n}`")))?;
            entries.push((w.to_owned(), n));
        }
        let vocab = Self::from_counts(entries);
        if vocab.index.len() != vocab.words.len() {
            return Err(Error::parse(origin, 0, "duplicate words"));
        }
        Ok(vocab)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tsv(&std::fs::read_to_string(path)?, &path.display().to_string())
    }
}

/// Weight P3(i) given to a context word at signed offset `i`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PositionalWeight {
    #[default]
    Constant,
    /// 1 / |i|
    Reciprocal,
}

impl PositionalWeight {
    pub fn weight(self, offset: isize) -> f64 {
        match self {
            PositionalWeight::Constant => 1.0,
            PositionalWeight::Reciprocal => 1.0 / offset.unsigned_abs() as f64,
        }
    }
}

impl FromStr for PositionalWeight {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(PositionalWeight::Constant),
            "reciprocal" => Ok(PositionalWeight::Reciprocal),
            _ => Err(Error::InvalidConfig(format!("unknown positional weight `{s}`"))),
        }
    }
}

impl fmt::Display for PositionalWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PositionalWeight::Constant => "constant",
            PositionalWeight::Reciprocal => "reciprocal",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowSpec {
    pub left: usize,
    pub right: usize,
    pub positional_weight: PositionalWeight,
    /// Down-sampling threshold for target words.
    pub subsample_threshold: Option<f64>,
    /// Also down-weight context words.
    pub context_subsample: bool,
    /// Threshold for context words; falls back to `subsample_threshold`.
    pub context_threshold: Option<f64>,
    /// Draw keep/drop decisions from the seeded RNG instead of using the
    /// expected keep probability as a weight.
    pub stochastic_subsample: bool,
}

impl WindowSpec {
    pub fn new(left: usize, right: usize) -> Result<Self> {
        let spec = WindowSpec {
            left,
            right,
            positional_weight: PositionalWeight::Constant,
            subsample_threshold: None,
            context_subsample: false,
            context_threshold: None,
            stochastic_subsample: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn symmetric_window(radius: usize) -> Result<Self> {
        Self::new(radius, radius)
    }

    pub fn with_weight(mut self, weight: PositionalWeight) -> Self {
        self.positional_weight = weight;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.left + self.right == 0 {
            return Err(Error::InvalidWindow("left + right must be at least 1".into()));
        }
        for t in [self.subsample_threshold, self.context_threshold].into_iter().flatten() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidWindow(format!("threshold must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// Both provided positional weights are even in the offset, so the
    /// window extent and the down-sampling of each side decide symmetry.
    pub fn symmetric(&self) -> bool {
        self.left == self.right && self.subsample_threshold == self.context_tau()
    }

    /// Offsets -left..=-1, 1..=right in window order.
    pub fn offsets(&self) -> impl Iterator<Item = isize> + '_ {
        (-(self.left as isize)..0).chain(1..=self.right as isize)
    }

    fn context_tau(&self) -> Option<f64> {
        if self.context_subsample {
            self.context_threshold.or(self.subsample_threshold)
        } else {
            None
        }
    }

    pub fn record(&self, cfg: &mut RunConfig) {
        cfg.set("left", self.left)
            .set("right", self.right)
            .set("positional-weight", self.positional_weight);
        if let Some(t) = self.subsample_threshold {
            cfg.set("subsample", t);
        }
        if let Some(t) = self.context_tau() {
            cfg.set("context-subsample", t);
        }
        if self.stochastic_subsample {
            cfg.set("stochastic-subsample", true);
        }
    }
}

/// Keep probability min(1, sqrt(tau / f_rel)).
pub fn keep_probability(tau: f64, relative_freq: f64) -> f64 {
    if relative_freq <= 0.0 {
        return 1.0;
    }
    (tau / relative_freq).sqrt().min(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CooccurrenceStats {
    num_words: usize,
    /// Sorted by (w, c); all weights strictly positive.
    pairs: Vec<(u32, u32, f64)>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
    total: f64,
}

impl CooccurrenceStats {
    pub fn empty(num_words: usize) -> Self {
        CooccurrenceStats {
            num_words,
            pairs: Vec::new(),
            row_marginal: vec![0.0; num_words],
            col_marginal: vec![0.0; num_words],
            total: 0.0,
        }
    }

    /// Build from raw (w, c, weight) entries. Duplicates are summed in input
    /// order; non-positive results are dropped.
    pub fn from_entries<I>(num_words: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
        for (w, c, x) in entries {
            if w >= num_words || c >= num_words {
                return Err(Error::DimensionMismatch(format!(
                    "pair ({w}, {c}) outside {num_words} words"
                )));
            }
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Domain(format!("pair weight must be finite and >= 0, got {x}")));
            }
            *acc.entry((w as u32, c as u32)).or_insert(0.0) += x;
        }
        Ok(Self::from_map(num_words, acc))
    }

    fn from_map(num_words: usize, acc: HashMap<(u32, u32), f64>) -> Self {
        let mut pairs: Vec<(u32, u32, f64)> = acc
            .into_iter()
            .filter(|&(_, x)| x > 0.0)
            .map(|((w, c), x)| (w, c, x))
            .collect();
        pairs.sort_unstable_by_key(|&(w, c, _)| (w, c));
        let mut row_marginal = vec![0.0; num_words];
        let mut col_marginal = vec![0.0; num_words];
        for &(w, c, x) in &pairs {
            row_marginal[w as usize] += x;
            col_marginal[c as usize] += x;
        }
        let total = pairs.iter().map(|p| p.2).sum();
        CooccurrenceStats {
            num_words,
            pairs,
            row_marginal,
            col_marginal,
            total,
        }
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn pairs(&self) -> &[(u32, u32, f64)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// #(w, c), zero when absent.
    pub fn get(&self, w: usize, c: usize) -> f64 {
        self.pairs
            .binary_search_by_key(&(w as u32, c as u32), |&(a, b, _)| (a, b))
            .map(|i| self.pairs[i].2)
            .unwrap_or(0.0)
    }

    /// #(w, .)
    pub fn row_marginal(&self, w: usize) -> f64 {
        self.row_marginal[w]
    }

    /// #(., c)
    pub fn col_marginal(&self, c: usize) -> f64 {
        self.col_marginal[c]
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginal
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginal
    }

    /// |D| = total pair mass.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Sum two count tables. Associative and commutative up to float
    /// rounding; exact for integer-valued weights.
    pub fn merge(&self, other: &CooccurrenceStats) -> Result<Self> {
        if self.num_words != other.num_words {
            return Err(Error::DimensionMismatch(format!(
                "merging {} and {} words",
                self.num_words, other.num_words
            )));
        }
        Self::from_entries(
            self.num_words,
            self.pairs
                .iter()
                .chain(&other.pairs)
                .map(|&(w, c, x)| (w as usize, c as usize, x)),
        )
    }

    /// Largest relative gap between the stored marginals/total and the sums
    /// they summarize.
    pub fn marginal_inconsistency(&self) -> f64 {
        let mut rows = vec![0.0; self.num_words];
        let mut cols = vec![0.0; self.num_words];
        for &(w, c, x) in &self.pairs {
            rows[w as usize] += x;
            cols[c as usize] += x;
        }
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        };
        let mut worst: f64 = 0.0;
        for i in 0..self.num_words {
            worst = worst.max(rel(rows[i], self.row_marginal[i]));
            worst = worst.max(rel(cols[i], self.col_marginal[i]));
        }
        worst = worst.max(rel(self.total, self.row_marginal.iter().sum()));
        worst.max(rel(self.total, self.col_marginal.iter().sum()))
    }

    pub fn to_triplets(&self, config: RunConfig) -> TripletFile {
        TripletFile {
            config,
            header: format!("{} {}", self.num_words, self.total),
            entries: self.pairs.clone(),
        }
    }

    pub fn from_triplets(file: &TripletFile, origin: &str) -> Result<Self> {
        let fields = file.header_fields();
        let (Some(n), Some(mass)) = (fields.first(), fields.get(1)) else {
            return Err(Error::parse(origin, 0, "header must be `num_words total_mass`"));
        };
        let n: usize = n
            .parse()
            .map_err(|_| Error::parse(origin, 0, format!("bad word count `{n}`")))?;
        let mass: f64 = mass
            .parse()
            .map_err(|_| Error::parse(origin, 0, format!("bad total mass `{mass}`")))?;
        let stats = Self::from_entries(n, file.entries.iter().map(|&(w, c, x)| (w as usize, c as usize, x)))?;
        let scale = mass.abs().max(stats.total.abs());
        if scale > 0.0 && (mass - stats.total).abs() > REL_TOL * scale {
            return Err(Error::parse(
                origin,
                0,
                format!("header mass {mass} disagrees with summed pairs {}", stats.total),
            ));
        }
        Ok(stats)
    }
}

/// Accumulate weighted co-occurrences over `documents`.
///
/// Out-of-vocabulary tokens are removed before windowing and windows never
/// cross document boundaries. `seed` only matters for stochastic
/// down-sampling; each document draws from its own stream so sharding does
/// not change the draws.
pub fn count_cooccurrences<S: AsRef<str> + Sync>(
    documents: &[Vec<S>],
    vocab: &Vocabulary,
    win: &WindowSpec,
    seed: u64,
) -> Result<CooccurrenceStats> {
    win.validate()?;
    let target_keep: Vec<f64> = match win.subsample_threshold {
        Some(tau) => (0..vocab.len())
            .map(|w| keep_probability(tau, vocab.relative_freq(w)))
            .collect(),
        None => vec![1.0; vocab.len()],
    };
    let context_keep: Vec<f64> = match win.context_tau() {
        Some(tau) => (0..vocab.len())
            .map(|w| keep_probability(tau, vocab.relative_freq(w)))
            .collect(),
        None => vec![1.0; vocab.len()],
    };
    let shards = documents.len().div_ceil(SHARD_DOCS);
    let partial = par::map_range(shards, |s| {
        let start = s * SHARD_DOCS;
        let end = (start + SHARD_DOCS).min(documents.len());
        let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
        for (doc_idx, doc) in documents[start..end].iter().enumerate() {
            let ids = vocab.encode(doc);
            count_document(
                &ids,
                win,
                &target_keep,
                &context_keep,
                (seed, (start + doc_idx) as u64),
                &mut acc,
            );
        }
        let mut v: Vec<_> = acc.into_iter().collect();
        v.sort_unstable_by_key(|&(k, _)| k);
        v
    });
    let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
    for shard in partial {
        for (k, x) in shard {
            *acc.entry(k).or_insert(0.0) += x;
        }
    }
    Ok(CooccurrenceStats::from_map(vocab.len(), acc))
}

fn count_document(
    ids: &[usize],
    win: &WindowSpec,
    target_keep: &[f64],
    context_keep: &[f64],
    (seed, stream): (u64, u64),
    acc: &mut HashMap<(u32, u32), f64>,
) {
    let (target_w, context_w): (Vec<f64>, Vec<f64>) = if win.stochastic_subsample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        ids.iter()
            .map(|&w| {
                let u: f64 = rng.gen();
                (
                    f64::from(u8::from(u < target_keep[w])),
                    f64::from(u8::from(u < context_keep[w])),
                )
            })
            .unzip()
    } else {
        ids.iter().map(|&w| (target_keep[w], context_keep[w])).unzip()
    };
    let n = ids.len() as isize;
    for t in 0..n {
        let p1 = target_w[t as usize];
        if p1 == 0.0 {
            continue;
        }
        for i in win.offsets() {
            let pos = t + i;
            if pos < 0 || pos >= n {
                continue;
            }
            let weight = p1 * context_w[pos as usize] * win.positional_weight.weight(i);
            if weight > 0.0 {
                let key = (ids[t as usize] as u32, ids[pos as usize] as u32);
                *acc.entry(key).or_insert(0.0) += weight;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryReport {
    pub symmetric: bool,
    /// Largest absolute gap between #(w,c) and #(c,w), or between #(w,.)
    /// and #(.,w).
    pub max_violation: f64,
}

pub fn check_symmetry(stats: &CooccurrenceStats) -> SymmetryReport {
    let mut symmetric = true;
    let mut max_violation: f64 = 0.0;
    let mut visit = |a: f64, b: f64| {
        let gap = (a - b).abs();
        if gap > REL_TOL * a.abs().max(b.abs()) {
            symmetric = false;
        }
        max_violation = max_violation.max(gap);
    };
    for &(w, c, x) in &stats.pairs {
        visit(x, stats.get(c as usize, w as usize));
    }
    for w in 0..stats.num_words {
        visit(stats.row_marginal[w], stats.col_marginal[w]);
    }
    SymmetryReport {
        symmetric,
        max_violation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn docs(s: &str) -> Vec<Vec<String>> {
        tokenize(s)
    }

    fn abab(left: usize, right: usize) -> CooccurrenceStats {
        let d = docs("a b a b");
        let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
        count_cooccurrences(&d, &v, &WindowSpec::new(left, right).unwrap(), 0).unwrap()
    }

    #[test]
    fn vocabulary_ordering_and_filtering() {
        let v = build_vocabulary(["a", "b", "a", "b"], 1).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
        assert_eq!((v.freq(0), v.freq(1), v.total_tokens()), (2, 2, 4));

        let v = build_vocabulary(["a", "b", "a"], 2).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.total_tokens(), 2);

        let err = build_vocabulary(Vec::<&str>::new(), 1).unwrap_err();
        assert_eq!(err.category(), "empty-vocabulary");
    }

    #[test]
    fn vocabulary_tsv_round_trip() {
        let v = build_vocabulary(["x", "y", "x", "z", "x", "y"], 1).unwrap();
        assert_eq!(v.to_tsv(), "x\t3\ny\t2\nz\t1\n");
        assert_eq!(Vocabulary::from_tsv(&v.to_tsv(), "v").unwrap(), v);
        assert!(Vocabulary::from_tsv("x 3\n", "v").is_err());
    }

    #[test]
    fn symmetric_window_counts() {
        let s = abab(1, 1);
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
        assert_eq!(s.row_marginal(0), 3.0);
        assert_eq!(s.col_marginal(1), 3.0);
        assert_eq!(s.total(), 6.0);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn left_window_counts() {
        let s = abab(1, 0);
        assert_eq!(s.get(0, 1), 1.0);
        assert_eq!(s.get(1, 0), 2.0);
        assert_eq!(s.total(), 3.0);
    }

    #[test]
    fn single_token_has_no_pairs() {
        let d = docs("a");
        let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
        let s = count_cooccurrences(&d, &v, &WindowSpec::new(2, 2).unwrap(), 0).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.total(), 0.0);
    }

    #[test]
    fn windows_stop_at_line_breaks() {
        let d = docs("a b\nb a");
        let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
        let s = count_cooccurrences(&d, &v, &WindowSpec::new(3, 3).unwrap(), 0).unwrap();
        assert_eq!(s.total(), 4.0);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn reciprocal_weights() {
        let d = docs("a b c");
        let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
        let win = WindowSpec::new(2, 2).unwrap().with_weight(PositionalWeight::Reciprocal);
        let s = count_cooccurrences(&d, &v, &win, 0).unwrap();
        let (a, c) = (v.id("a").unwrap(), v.id("c").unwrap());
        assert_eq!(s.get(a, c), 0.5);
        assert_eq!(s.get(c, a), 0.5);
        assert_eq!(s.total(), 5.0);
    }

    #[test]
    fn deterministic_subsampling_weights() {
        let d = docs("a a a b");
        let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
        let mut win = WindowSpec::new(1, 1).unwrap();
        win.subsample_threshold = Some(0.25);
        let s = count_cooccurrences(&d, &v, &win, 0).unwrap();
        let (a, b) = (v.id("a").unwrap(), v.id("b").unwrap());
        // f_rel(a) = 3/4 -> keep sqrt(1/3); f_rel(b) = 1/4 -> keep 1
        let pa = (0.25f64 / 0.75).sqrt();
        assert!((s.get(a, a) - 4.0 * pa).abs() < 1e-15);
        assert!((s.get(a, b) - pa).abs() < 1e-15);
        assert_eq!(s.get(b, a), 1.0);

        win.context_subsample = true;
        let s = count_cooccurrences(&d, &v, &win, 0).unwrap();
        assert!((s.get(a, a) - 4.0 * pa * pa).abs() < 1e-15);
        assert!((s.get(b, a) - pa).abs() < 1e-15);
    }

    #[test]
    fn stochastic_subsampling_is_seeded() {
        let text = "a a a a a a b c a a a b a a d a a a a c\n".repeat(20);
        let d = docs(&text);
        let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
        let mut win = WindowSpec::new(2, 2).unwrap();
        win.subsample_threshold = Some(0.05);
        win.stochastic_subsample = true;
        let s1 = count_cooccurrences(&d, &v, &win, 7).unwrap();
        let s2 = count_cooccurrences(&d, &v, &win, 7).unwrap();
        let s3 = count_cooccurrences(&d, &v, &win, 8).unwrap();
        assert_eq!(s1, s2);
        assert_ne!(s1, s3);
        assert!(s1.pairs().iter().all(|p| p.2.fract() == 0.0));
    }

    #[test]
    fn invalid_window() {
        assert_eq!(WindowSpec::new(0, 0).unwrap_err().category(), "invalid-window");
        let mut w = WindowSpec::new(1, 1).unwrap();
        w.subsample_threshold = Some(-1.0);
        assert!(w.validate().is_err());
    }

    #[test]
    fn symmetry_reports() {
        let r = check_symmetry(&abab(1, 1));
        assert!(r.symmetric);
        assert_eq!(r.max_violation, 0.0);
        let r = check_symmetry(&abab(1, 0));
        assert!(!r.symmetric);
        assert_eq!(r.max_violation, 1.0);
        let r = check_symmetry(&CooccurrenceStats::empty(3));
        assert!(r.symmetric);
    }

    #[test]
    fn triplet_round_trip_checks_mass() {
        let s = abab(1, 0);
        let file = s.to_triplets(RunConfig::new());
        assert_eq!(file.header, "2 3");
        assert_eq!(CooccurrenceStats::from_triplets(&file, "c").unwrap(), s);
        let mut bad = file.clone();
        bad.header = "2 4".into();
        assert!(CooccurrenceStats::from_triplets(&bad, "c").is_err());
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
        let word = prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]);
        prop::collection::vec(prop::collection::vec(word.prop_map(String::from), 0..25), 1..12)
    }

    proptest! {
        #[test]
        fn symmetric_windows_give_symmetric_counts(
            d in corpus_strategy(),
            radius in 1usize..4,
            reciprocal in any::<bool>(),
            tau in prop::option::of(0.01f64..0.5),
        ) {
            prop_assume!(d.iter().any(|doc| !doc.is_empty()));
            let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
            let mut win = WindowSpec::new(radius, radius).unwrap();
            if reciprocal {
                win.positional_weight = PositionalWeight::Reciprocal;
            }
            win.subsample_threshold = tau;
            win.context_subsample = true;
            let s = count_cooccurrences(&d, &v, &win, 1).unwrap();
            prop_assert!(check_symmetry(&s).symmetric);
            prop_assert!(s.marginal_inconsistency() <= REL_TOL);
        }

        #[test]
        fn counting_is_shard_mergeable(d in corpus_strategy(), left in 0usize..3, right in 1usize..3, split in 0usize..12) {
            prop_assume!(d.iter().any(|doc| !doc.is_empty()));
            let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
            let win = WindowSpec::new(left, right).unwrap();
            let split = split.min(d.len());
            let whole = count_cooccurrences(&d, &v, &win, 0).unwrap();
            let a = count_cooccurrences(&d[..split], &v, &win, 0).unwrap();
            let b = count_cooccurrences(&d[split..], &v, &win, 0).unwrap();
            prop_assert_eq!(&a.merge(&b).unwrap(), &whole);
            prop_assert_eq!(&b.merge(&a).unwrap(), &whole);
            prop_assert!(whole.marginal_inconsistency() <= REL_TOL);
        }

        #[test]
        fn total_counts_in_window_pairs(d in corpus_strategy(), left in 0usize..4, right in 0usize..4) {
            prop_assume!(left + right > 0 && d.iter().any(|doc| !doc.is_empty()));
            let v = build_vocabulary(d.iter().flatten(), 1).unwrap();
            let win = WindowSpec::new(left, right).unwrap();
            let s = count_cooccurrences(&d, &v, &win, 0).unwrap();
            let expected: usize = d
                .iter()
                .map(|doc| {
                    let n = doc.len() as isize;
                    (0..n).map(|t| win.offsets().filter(|i| (0..n).contains(&(t + i))).count()).sum::<usize>()
                })
                .sum();
            prop_assert_eq!(s.total(), expected as f64);
        }
    }
}

//! Sparse interpretable word vectors over fixed context representations.
//!
//! Each word gets a vector w in R^m scored against a fixed feature vector
//! z of its context, trained with an L1 penalty by proximal descent:
//! a gradient step on the data term followed by soft-thresholding.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::closed_form::{solve_pair, PairCounts};
use crate::config::RunConfig;
use crate::corpus::{keep_probability, Vocabulary, WindowSpec};
use crate::embedding::{Embedding, Score};
use crate::error::{Error, Result};
use crate::loss::{sigmoid, softplus, LossKind};
use crate::par;

/// Largest vocabulary accepted by the softmax objective.
pub const SOFTMAX_VOCAB_LIMIT: usize = 2000;
/// Fixed number of gradient chunks in full-batch mode; independent of the
/// thread count so sums are reproducible.
const GRADIENT_CHUNKS: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ContextMode {
    /// One example per context word, z = e_c.
    #[default]
    Single,
    /// One example per position, z = weighted bag of context words.
    Bag,
    /// One block of |V| features per window offset.
    Positional,
}

impl FromStr for ContextMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ContextMode::Single),
            "bag" => Ok(ContextMode::Bag),
            "positional" => Ok(ContextMode::Positional),
            _ => Err(Error::InvalidConfig(format!("unknown context mode `{s}`"))),
        }
    }
}

impl fmt::Display for ContextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextMode::Single => "single",
            ContextMode::Bag => "bag",
            ContextMode::Positional => "positional",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextSpec {
    pub mode: ContextMode,
    pub window: WindowSpec,
}

impl ContextSpec {
    pub fn new(mode: ContextMode, window: WindowSpec) -> Result<Self> {
        window.validate()?;
        if window.stochastic_subsample {
            return Err(Error::InvalidConfig(
                "context features use expected down-sampling weights only".into(),
            ));
        }
        Ok(ContextSpec { mode, window })
    }

    pub fn num_features(&self, vocab_size: usize) -> usize {
        match self.mode {
            ContextMode::Single | ContextMode::Bag => vocab_size,
            ContextMode::Positional => (self.window.left + self.window.right) * vocab_size,
        }
    }

    fn block(&self, offset: isize) -> usize {
        if offset < 0 {
            (offset + self.window.left as isize) as usize
        } else {
            self.window.left + offset as usize - 1
        }
    }

    fn block_offset(&self, block: usize) -> isize {
        if block < self.window.left {
            block as isize - self.window.left as isize
        } else {
            (block - self.window.left) as isize + 1
        }
    }

    pub fn feature_name(&self, vocab_words: &[String], feature: usize) -> String {
        let n = vocab_words.len();
        match self.mode {
            ContextMode::Single | ContextMode::Bag => vocab_words[feature].clone(),
            ContextMode::Positional => {
                format!("{:+}:{}", self.block_offset(feature / n), vocab_words[feature % n])
            }
        }
    }

    pub fn record(&self, cfg: &mut RunConfig) {
        cfg.set("context-mode", self.mode);
        self.window.record(cfg);
    }
}

/// One training example: target word, sparse context features, weight.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextExample {
    pub target: u32,
    /// Sorted by feature, no duplicates, no zeros.
    pub z: Vec<(u32, f64)>,
    pub weight: f64,
}

fn collapse(mut z: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    z.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(z.len());
    for (f, v) in z {
        match out.last_mut() {
            Some(last) if last.0 == f => last.1 += v,
            _ => out.push((f, v)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// Examples contributed by position `t` of an encoded document.
pub fn build_context(doc: &[usize], t: usize, spec: &ContextSpec, vocab: &Vocabulary) -> Vec<ContextExample> {
    let win = &spec.window;
    let n = vocab.len();
    let target = doc[t];
    let target_keep = win
        .subsample_threshold
        .map_or(1.0, |tau| keep_probability(tau, vocab.relative_freq(target)));
    let context_tau = if win.context_subsample {
        win.context_threshold.or(win.subsample_threshold)
    } else {
        None
    };
    let mut cells = Vec::new();
    for off in win.offsets() {
        let j = t as isize + off;
        if j < 0 || j as usize >= doc.len() {
            continue;
        }
        let c = doc[j as usize];
        let keep = context_tau.map_or(1.0, |tau| keep_probability(tau, vocab.relative_freq(c)));
        cells.push((off, c, win.positional_weight.weight(off) * keep));
    }
    if target_keep == 0.0 {
        return Vec::new();
    }
    match spec.mode {
        ContextMode::Single => cells
            .into_iter()
            .filter(|&(_, _, rho)| rho > 0.0)
            .map(|(_, c, rho)| ContextExample {
                target: target as u32,
                z: vec![(c as u32, 1.0)],
                weight: target_keep * rho,
            })
            .collect(),
        ContextMode::Bag | ContextMode::Positional => {
            let z = collapse(
                cells
                    .into_iter()
                    .map(|(off, c, rho)| {
                        let f = match spec.mode {
                            ContextMode::Positional => spec.block(off) * n + c,
                            _ => c,
                        };
                        (f as u32, rho)
                    })
                    .collect(),
            );
            if z.is_empty() {
                return Vec::new();
            }
            vec![ContextExample {
                target: target as u32,
                z,
                weight: target_keep,
            }]
        }
    }
}

/// All examples of an encoded corpus in document and position order.
pub fn build_examples(docs: &[Vec<usize>], spec: &ContextSpec, vocab: &Vocabulary) -> Vec<ContextExample> {
    par::map_slice(docs, |doc| {
        (0..doc.len())
            .flat_map(|t| build_context(doc, t, spec, vocab))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    Softmax,
    #[default]
    NegativeSampling,
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(Objective::Softmax),
            "negative-sampling" | "ns" => Ok(Objective::NegativeSampling),
            _ => Err(Error::InvalidConfig(format!("unknown objective `{s}`"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Softmax => "softmax",
            Objective::NegativeSampling => "negative-sampling",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Noise {
    /// Proportional to corpus frequency.
    #[default]
    Unigram,
    Uniform,
}

impl FromStr for Noise {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unigram" => Ok(Noise::Unigram),
            "uniform" => Ok(Noise::Uniform),
            _ => Err(Error::InvalidConfig(format!("unknown noise distribution `{s}`"))),
        }
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Noise::Unigram => "unigram",
            Noise::Uniform => "uniform",
        })
    }
}

pub fn noise_probabilities(vocab: &Vocabulary, noise: Noise) -> Vec<f64> {
    let n = vocab.len();
    match noise {
        Noise::Uniform => vec![1.0 / n as f64; n],
        Noise::Unigram => (0..n).map(|i| vocab.relative_freq(i)).collect(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// η_t = η0·(1 - t/T)
    #[default]
    LinearDecay,
    Constant,
}

impl Schedule {
    pub fn step(self, eta0: f64, t: usize, total: usize) -> f64 {
        match self {
            Schedule::Constant => eta0,
            Schedule::LinearDecay => eta0 * (1.0 - t as f64 / total.max(1) as f64).max(1e-4),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Schedule::LinearDecay),
            "constant" => Ok(Schedule::Constant),
            _ => Err(Error::InvalidConfig(format!("unknown schedule `{s}`"))),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schedule::LinearDecay => "linear",
            Schedule::Constant => "constant",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Batch {
    /// One proximal step per example.
    #[default]
    Stochastic,
    /// Proximal gradient on the aggregated mean objective with expected
    /// negatives.
    Full,
}

impl FromStr for Batch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(Batch::Stochastic),
            "full" => Ok(Batch::Full),
            _ => Err(Error::InvalidConfig(format!("unknown batch mode `{s}`"))),
        }
    }
}

impl fmt::Display for Batch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Batch::Stochastic => "stochastic",
            Batch::Full => "full",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub k_neg: usize,
    /// Passes over the examples (stochastic) or gradient iterations (full).
    pub epochs: usize,
    pub eta0: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub objective: Objective,
    pub noise: Noise,
    pub batch: Batch,
    /// Lock-free stochastic workers; results depend on scheduling when > 1.
    pub workers: usize,
    /// Full batch stops once no coordinate moves by more than this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.0,
            k_neg: 5,
            epochs: 5,
            eta0: 0.025,
            schedule: Schedule::LinearDecay,
            seed: 1,
            objective: Objective::NegativeSampling,
            noise: Noise::Unigram,
            batch: Batch::Stochastic,
            workers: 1,
            tolerance: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.k_neg == 0 {
            return Err(Error::InvalidConfig("k-neg must be at least 1".into()));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eta0 must be positive, got {}",
                self.eta0
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be at least 1".into()));
        }
        if self.objective == Objective::Softmax && vocab_size > SOFTMAX_VOCAB_LIMIT {
            return Err(Error::InvalidConfig(format!(
                "softmax needs |V| <= {SOFTMAX_VOCAB_LIMIT}, got {vocab_size}"
            )));
        }
        Ok(())
    }

    pub fn record(&self, cfg: &mut RunConfig) {
        cfg.set("lambda", self.lambda)
            .set("k-neg", self.k_neg)
            .set("epochs", self.epochs)
            .set("eta0", self.eta0)
            .set("schedule", self.schedule)
            .set("seed", self.seed)
            .set("objective", self.objective)
            .set("noise", self.noise)
            .set("batch", self.batch)
            .set("workers", self.workers)
            .set("tolerance", self.tolerance);
    }
}

/// Examples sharing one context vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextGroup {
    pub z: Vec<(u32, f64)>,
    /// (target word, summed example weight), sorted by word.
    pub targets: Vec<(u32, f64)>,
    /// Sum of the target weights.
    pub total: f64,
}

/// Aggregated full-batch problem. Loss and gradient are means over the
/// total example weight; the L1 term is added separately.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexProblem {
    num_words: usize,
    num_features: usize,
    groups: Vec<ContextGroup>,
    objective: Objective,
    noise: Vec<f64>,
    k_neg: f64,
    total_weight: f64,
}

impl ConvexProblem {
    pub fn new(
        num_words: usize,
        num_features: usize,
        groups: Vec<ContextGroup>,
        objective: Objective,
        noise: Vec<f64>,
        k_neg: f64,
    ) -> Result<Self> {
        if noise.len() != num_words {
            return Err(Error::DimensionMismatch(format!(
                "{} noise probabilities for {num_words} words",
                noise.len()
            )));
        }
        for g in &groups {
            if g.z.iter().any(|&(f, _)| f as usize >= num_features)
                || g.targets.iter().any(|&(t, _)| t as usize >= num_words)
            {
                return Err(Error::DimensionMismatch("example outside the model shape".into()));
            }
        }
        let total_weight: f64 = groups.iter().map(|g| g.total).sum();
        if total_weight.is_nan() || total_weight <= 0.0 {
            return Err(Error::Domain("no training examples".into()));
        }
        Ok(ConvexProblem {
            num_words,
            num_features,
            groups,
            objective,
            noise,
            k_neg,
            total_weight,
        })
    }

    pub fn from_examples(
        examples: &[ContextExample],
        num_words: usize,
        num_features: usize,
        objective: Objective,
        noise: Vec<f64>,
        k_neg: f64,
    ) -> Result<Self> {
        let mut by_z: BTreeMap<Vec<(u32, u64)>, BTreeMap<u32, f64>> = BTreeMap::new();
        for e in examples {
            let key = e.z.iter().map(|&(f, v)| (f, v.to_bits())).collect();
            *by_z.entry(key).or_default().entry(e.target).or_default() += e.weight;
        }
        let groups = by_z
            .into_iter()
            .map(|(key, targets)| {
                let targets: Vec<(u32, f64)> = targets.into_iter().collect();
                ContextGroup {
                    z: key.into_iter().map(|(f, b)| (f, f64::from_bits(b))).collect(),
                    total: targets.iter().map(|t| t.1).sum(),
                    targets,
                }
            })
            .collect();
        Self::new(num_words, num_features, groups, objective, noise, k_neg)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.num_words, self.num_features)
    }

    pub fn groups(&self) -> &[ContextGroup] {
        &self.groups
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    fn group_terms(&self, g: &ContextGroup, w: &[f64], coef: &mut [f64]) -> f64 {
        let m = self.num_features;
        let scores: Vec<f64> = (0..self.num_words)
            .map(|v| g.z.iter().map(|&(f, x)| w[v * m + f as usize] * x).sum())
            .collect();
        coef.iter_mut().for_each(|c| *c = 0.0);
        let mut loss = 0.0;
        match self.objective {
            Objective::NegativeSampling => {
                for &(t, n) in &g.targets {
                    let s = scores[t as usize];
                    loss += n * softplus(-s);
                    coef[t as usize] -= n * sigmoid(-s);
                }
                for v in 0..self.num_words {
                    let b = self.k_neg * g.total * self.noise[v];
                    if b > 0.0 {
                        loss += b * softplus(scores[v]);
                        coef[v] += b * sigmoid(scores[v]);
                    }
                }
            }
            Objective::Softmax => {
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
                let lse = max + sum.ln();
                loss += g.total * lse;
                for (v, s) in scores.iter().enumerate() {
                    coef[v] += g.total * (s - lse).exp();
                }
                for &(t, n) in &g.targets {
                    loss -= n * scores[t as usize];
                    coef[t as usize] -= n;
                }
            }
        }
        loss
    }

    /// Mean data loss and its gradient (row-major, words x features).
    pub fn loss_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let m = self.num_features;
        let size = self.num_words * m;
        let per_chunk = self.groups.len().div_ceil(GRADIENT_CHUNKS).max(1);
        let chunks: Vec<&[ContextGroup]> = self.groups.chunks(per_chunk).collect();
        let partial = par::map_slice(&chunks, |chunk| {
            let mut grad = vec![0.0; size];
            let mut coef = vec![0.0; self.num_words];
            let mut loss = 0.0;
            for g in chunk.iter() {
                loss += self.group_terms(g, w, &mut coef);
                for (v, &cv) in coef.iter().enumerate() {
                    if cv != 0.0 {
                        for &(f, x) in &g.z {
                            grad[v * m + f as usize] += cv * x;
                        }
                    }
                }
            }
            (loss, grad)
        });
        let mut loss = 0.0;
        let mut grad = vec![0.0; size];
        for (l, g) in partial {
            loss += l;
            grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        let scale = 1.0 / self.total_weight;
        grad.iter_mut().for_each(|g| *g *= scale);
        (loss * scale, grad)
    }

    pub fn loss(&self, w: &[f64]) -> f64 {
        self.loss_and_gradient(w).0
    }

    /// 1/L for an upper bound L on the data-loss curvature; a constant step
    /// at or below this makes full-batch descent monotone.
    pub fn safe_step(&self) -> f64 {
        let mut per_row = vec![0.0; self.num_words];
        for g in &self.groups {
            let z2: f64 = g.z.iter().map(|e| e.1 * e.1).sum();
            match self.objective {
                Objective::NegativeSampling => {
                    for &(t, n) in &g.targets {
                        per_row[t as usize] += 0.25 * n * z2;
                    }
                    for (v, p) in self.noise.iter().enumerate() {
                        per_row[v] += 0.25 * self.k_neg * g.total * p * z2;
                    }
                }
                Objective::Softmax => per_row.iter_mut().for_each(|r| *r += g.total * z2),
            }
        }
        let l = per_row.into_iter().fold(0.0, f64::max) / self.total_weight;
        if l > 0.0 {
            1.0 / l
        } else {
            1.0
        }
    }

    /// Data loss plus λ‖W‖₁.
    pub fn objective(&self, w: &[f64], lambda: f64) -> f64 {
        self.loss(w) + lambda * l1_norm(w)
    }

    /// Closed-form logistic minimizer of every (word, feature) coordinate
    /// with positive weight. Defined only when every context vector is a
    /// unit basis vector and λ = 0.
    pub fn logistic_fixed_point(&self) -> Result<Vec<(u32, u32, f64)>> {
        if self.objective != Objective::NegativeSampling {
            return Err(Error::InvalidConfig(
                "closed form needs the negative-sampling objective".into(),
            ));
        }
        let mut out = Vec::new();
        for g in &self.groups {
            let [(c, x)] = g.z.as_slice() else {
                return Err(Error::InvalidConfig("closed form needs one-hot contexts".into()));
            };
            if *x != 1.0 {
                return Err(Error::InvalidConfig("closed form needs one-hot contexts".into()));
            }
            for &(t, n) in &g.targets {
                let counts = PairCounts::new(
                    n,
                    self.noise[t as usize] * self.total_weight,
                    g.total,
                    self.total_weight,
                );
                let sol = solve_pair(LossKind::Logistic, counts, self.k_neg)?;
                if let Score::Finite(v) = sol.x_star {
                    out.push((t, *c, v));
                }
            }
        }
        out.sort_by_key(|e| (e.0, e.1));
        Ok(out)
    }
}

pub fn l1_norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x.abs()).sum()
}

/// sign(x)·max(|x| - threshold, 0)
pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

/// Proximal map of η·λ‖·‖₁ after a gradient step.
pub fn proximal_step(w: &mut [f64], grad: &[f64], eta: f64, lambda: f64) {
    for (x, g) in w.iter_mut().zip(grad) {
        *x = soft_threshold(*x - eta * g, eta * lambda);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexModel {
    pub spec: ContextSpec,
    /// |V| x m; labels are the vocabulary words.
    pub embedding: Embedding,
}

impl ConvexModel {
    pub fn feature_name(&self, feature: usize) -> String {
        self.spec.feature_name(self.embedding.labels(), feature)
    }

    pub fn nonzeros(&self) -> usize {
        self.embedding.values().iter().filter(|v| **v != 0.0).count()
    }

    pub fn save(&self, path: &std::path::Path, config: &RunConfig) -> Result<()> {
        let mut cfg = config.clone();
        self.spec.record(&mut cfg);
        cfg.set(
            "feature-naming",
            match self.spec.mode {
                ContextMode::Positional => "offset:word",
                _ => "word",
            },
        );
        self.embedding.save(path, &cfg)
    }

    /// Rebuilds the model from an embedding file written by `save`.
    pub fn from_embedding(config: &RunConfig, embedding: Embedding) -> Result<Self> {
        let mode: ContextMode = config
            .parse_value("context-mode")?
            .ok_or_else(|| Error::InvalidConfig("embedding has no context-mode".into()))?;
        let left = config.parse_value("left")?.unwrap_or(0);
        let right = config.parse_value("right")?.unwrap_or(0);
        let mut window = WindowSpec::new(left, right)?;
        if let Some(pw) = config.parse_value("positional-weight")? {
            window.positional_weight = pw;
        }
        let spec = ContextSpec { mode, window };
        if spec.num_features(embedding.len()) != embedding.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{mode} mode expects {} features, found {}",
                spec.num_features(embedding.len()),
                embedding.dim()
            )));
        }
        Ok(ConvexModel { spec, embedding })
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ConvexModel,
    /// Full batch: objective before each iteration and at the end.
    /// Stochastic: mean example loss of each epoch.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Trains on encoded documents.
pub fn train(docs: &[Vec<usize>], vocab: &Vocabulary, spec: &ContextSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary { min_count: 0 });
    }
    cfg.validate(vocab.len())?;
    let examples = build_examples(docs, spec, vocab);
    let m = spec.num_features(vocab.len());
    let noise = noise_probabilities(vocab, cfg.noise);
    let (w, history, iterations) = match cfg.batch {
        Batch::Full => {
            let problem =
                ConvexProblem::from_examples(&examples, vocab.len(), m, cfg.objective, noise, cfg.k_neg as f64)?;
            full_batch(&problem, cfg)?
        }
        Batch::Stochastic => stochastic(&examples, vocab.len(), m, &noise, cfg)?,
    };
    Ok(TrainOutcome {
        model: ConvexModel {
            spec: spec.clone(),
            embedding: Embedding::from_rows(vocab.words().to_vec(), m, w)?,
        },
        history,
        iterations,
    })
}

/// Proximal gradient descent from W = 0.
pub fn full_batch(problem: &ConvexProblem, cfg: &TrainConfig) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (n, m) = problem.shape();
    let mut w = vec![0.0; n * m];
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut iterations = 0;
    loop {
        let (loss, grad) = problem.loss_and_gradient(&w);
        let value = loss + cfg.lambda * l1_norm(&w);
        let eta = cfg.schedule.step(cfg.eta0, iterations, cfg.epochs);
        if !value.is_finite() {
            return Err(Error::NonFinite {
                iteration: iterations,
                step: eta,
                detail: format!("objective {value}"),
            });
        }
        history.push(value);
        if iterations == cfg.epochs {
            break;
        }
        let before = w.clone();
        proximal_step(&mut w, &grad, eta, cfg.lambda);
        iterations += 1;
        let moved = w.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved <= cfg.tolerance {
            history.push(problem.objective(&w, cfg.lambda));
            break;
        }
    }
    Ok((w, history, iterations))
}

struct SharedWeights(Vec<AtomicU64>);

impl SharedWeights {
    fn zeros(len: usize) -> Self {
        SharedWeights((0..len).map(|_| AtomicU64::new(0f64.to_bits())).collect())
    }

    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    fn set(&self, i: usize, v: f64) {
        self.0[i].store(v.to_bits(), Ordering::Relaxed);
    }

    fn into_vec(self) -> Vec<f64> {
        self.0.into_iter().map(|a| f64::from_bits(a.into_inner())).collect()
    }
}

struct Sgd<'a> {
    weights: &'a SharedWeights,
    m: usize,
    num_words: usize,
    noise: Option<WeightedIndex<f64>>,
    cfg: &'a TrainConfig,
}

impl Sgd<'_> {
    fn score(&self, v: usize, z: &[(u32, f64)]) -> f64 {
        z.iter()
            .map(|&(f, x)| self.weights.get(v * self.m + f as usize) * x)
            .sum()
    }

    fn update(&self, v: usize, z: &[(u32, f64)], coef: f64, eta: f64) {
        for &(f, x) in z {
            let i = v * self.m + f as usize;
            let stepped = self.weights.get(i) - eta * coef * x;
            self.weights.set(i, soft_threshold(stepped, eta * self.cfg.lambda));
        }
    }

    /// One proximal step on a single example; returns its loss.
    fn step(&self, e: &ContextExample, eta: f64, rng: &mut ChaCha8Rng) -> f64 {
        let t = e.target as usize;
        match self.cfg.objective {
            Objective::NegativeSampling => {
                let sampler = self.noise.as_ref().expect("negative sampling has a sampler");
                let negatives: Vec<usize> = (0..self.cfg.k_neg).map(|_| sampler.sample(rng)).collect();
                let s = self.score(t, &e.z);
                let mut loss = softplus(-s);
                let mut updates = vec![(t, -sigmoid(-s))];
                for v in negatives {
                    let s = self.score(v, &e.z);
                    loss += softplus(s);
                    updates.push((v, sigmoid(s)));
                }
                for (v, g) in updates {
                    self.update(v, &e.z, e.weight * g, eta);
                }
                e.weight * loss
            }
            Objective::Softmax => {
                let scores: Vec<f64> = (0..self.num_words).map(|v| self.score(v, &e.z)).collect();
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
                for (v, s) in scores.iter().enumerate() {
                    let g = (s - lse).exp() - f64::from(u8::from(v == t));
                    self.update(v, &e.z, e.weight * g, eta);
                }
                e.weight * (lse - scores[t])
            }
        }
    }
}

fn stochastic(
    examples: &[ContextExample],
    num_words: usize,
    m: usize,
    noise: &[f64],
    cfg: &TrainConfig,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let weights = SharedWeights::zeros(num_words * m);
    let sampler = match cfg.objective {
        Objective::NegativeSampling => Some(
            WeightedIndex::new(noise.iter().copied()).map_err(|e| Error::Domain(format!("noise distribution: {e}")))?,
        ),
        Objective::Softmax => None,
    };
    let sgd = Sgd {
        weights: &weights,
        m,
        num_words,
        noise: sampler,
        cfg,
    };
    let workers = cfg.workers.min(examples.len().max(1));
    let per_worker = examples.len().div_ceil(workers).max(1);
    let shards: Vec<&[ContextExample]> = examples.chunks(per_worker).collect();
    let total_weight: f64 = examples.iter().map(|e| e.weight).sum();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut rngs: Vec<ChaCha8Rng> = (0..shards.len())
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
            r.set_stream(i as u64);
            r
        })
        .collect();
    let run_shard = |shard: &[ContextExample], epoch: usize, rng: &mut ChaCha8Rng| -> Result<f64> {
        let total = cfg.epochs * shard.len();
        let mut loss = 0.0;
        for (i, e) in shard.iter().enumerate() {
            let t = epoch * shard.len() + i;
            let eta = cfg.schedule.step(cfg.eta0, t, total);
            let l = sgd.step(e, eta, rng);
            if !l.is_finite() {
                return Err(Error::NonFinite {
                    iteration: t,
                    step: eta,
                    detail: format!("example loss {l} for word id {}", e.target),
                });
            }
            loss += l;
        }
        Ok(loss)
    };
    for epoch in 0..cfg.epochs {
        let losses: Vec<Result<f64>> = if shards.len() <= 1 {
            shards
                .iter()
                .zip(rngs.iter_mut())
                .map(|(s, r)| run_shard(s, epoch, r))
                .collect()
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = shards
                    .iter()
                    .zip(rngs.iter_mut())
                    .map(|(s, r)| {
                        let run = &run_shard;
                        scope.spawn(move || run(s, epoch, r))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .collect()
            })
        };
        let mut epoch_loss = 0.0;
        for l in losses {
            epoch_loss += l?;
        }
        if !epoch_loss.is_finite() {
            return Err(Error::NonFinite {
                iteration: (epoch + 1) * per_worker,
                step: cfg.schedule.step(cfg.eta0, epoch * per_worker, cfg.epochs * per_worker),
                detail: format!("epoch {epoch} loss {epoch_loss}"),
            });
        }
        history.push(if total_weight > 0.0 {
            epoch_loss / total_weight
        } else {
            0.0
        });
    }
    Ok((weights.into_vec(), history, cfg.epochs))
}

/// Largest-magnitude coordinates of a word's vector, named by feature.
pub fn explain(word: &str, model: &ConvexModel, top_n: usize) -> Result<Vec<(String, f64)>> {
    let row = model
        .embedding
        .find(word)
        .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    let mut coords: Vec<(usize, f64)> = model
        .embedding
        .row(row)
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| *v != 0.0)
        .collect();
    coords.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    Ok(coords
        .into_iter()
        .take(top_n)
        .map(|(f, v)| (model.feature_name(f), v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;

    fn vocab_ab() -> Vocabulary {
        build_vocabulary(["a", "b", "a"], 1).unwrap()
    }

    fn spec(mode: ContextMode) -> ContextSpec {
        ContextSpec::new(mode, WindowSpec::symmetric_window(1).unwrap()).unwrap()
    }

    #[test]
    fn bag_collapses_repeats() {
        let v = vocab_ab();
        let doc = v.encode(&["a", "b", "a"]);
        let ex = build_context(&doc, 1, &spec(ContextMode::Bag), &v);
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].z, vec![(v.id("a").unwrap() as u32, 2.0)]);
    }

    #[test]
    fn single_gives_one_example_per_context_word() {
        let v = vocab_ab();
        let doc = v.encode(&["a", "b", "a"]);
        let ex = build_context(&doc, 1, &spec(ContextMode::Single), &v);
        let a = v.id("a").unwrap() as u32;
        assert_eq!(ex.len(), 2);
        assert!(ex.iter().all(|e| e.z == vec![(a, 1.0)] && e.weight == 1.0));
    }

    #[test]
    fn positional_blocks() {
        let v = vocab_ab();
        let doc = v.encode(&["a", "b", "a"]);
        let s = spec(ContextMode::Positional);
        assert_eq!(s.num_features(v.len()), 4);
        let ex = build_context(&doc, 1, &s, &v);
        let a = v.id("a").unwrap();
        assert_eq!(ex[0].z, vec![(a as u32, 1.0), ((2 + a) as u32, 1.0)]);
        assert_eq!(s.feature_name(v.words(), a), "-1:a");
        assert_eq!(s.feature_name(v.words(), 2 + a), "+1:a");
    }

    #[test]
    fn soft_threshold_shrinks_by_step() {
        let mut w = vec![0.3, -0.05, 2.0, 0.0];
        proximal_step(&mut w, &[0.0; 4], 0.5, 0.2);
        let expected = [0.2, 0.0, 1.9, 0.0];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_at_zero() {
        let groups = vec![ContextGroup {
            z: vec![(1, 1.0)],
            targets: vec![(0, 1.0)],
            total: 1.0,
        }];
        let p = ConvexProblem::new(2, 2, groups, Objective::NegativeSampling, vec![0.5, 0.5], 2.0).unwrap();
        let (_, g) = p.loss_and_gradient(&[0.0; 4]);
        // target row: -½ + 2·½·½ ; other row: 2·½·½
        assert_eq!(g, vec![0.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn explain_reads_out_nonzeros() {
        let v = vocab_ab();
        let mut e = Embedding::zeros(v.words().to_vec(), 2);
        let a = v.id("a").unwrap();
        let b = v.id("b").unwrap();
        let model = ConvexModel {
            spec: spec(ContextMode::Single),
            embedding: e.clone(),
        };
        assert!(explain("a", &model, 5).unwrap().is_empty());
        e.set(a, b, Score::Finite(1.7));
        let model = ConvexModel { embedding: e, ..model };
        assert_eq!(explain("a", &model, 5).unwrap(), vec![("b".to_string(), 1.7)]);
        assert_eq!(explain("zzz", &model, 5).unwrap_err().category(), "unknown-word");
    }

    #[test]
    fn config_validation() {
        let cfg = TrainConfig {
            objective: Objective::Softmax,
            ..TrainConfig::default()
        };
        assert!(cfg.validate(SOFTMAX_VOCAB_LIMIT + 1).is_err());
        assert!(cfg.validate(10).is_ok());
        assert!(TrainConfig {
            k_neg: 0,
            ..TrainConfig::default()
        }
        .validate(10)
        .is_err());
        assert!(TrainConfig {
            lambda: -1.0,
            ..TrainConfig::default()
        }
        .validate(10)
        .is_err());
    }
}

//! Low-rank factorization of solution matrices.
//!
//! Randomized truncated SVD over sparse or dense operands, SVD word
//! vectors, the dot-product consistency check, and alternating least
//! squares for the curvature-weighted quadratic objective
//!
//! ```text
//! ½ Σ α(w,c)·(w·c - x*(w,c))² + ridge·(‖W‖² + ‖C‖²)
//! ```

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::closed_form::{solve_pairs, EmbeddingPair};
use crate::corpus::CooccurrenceStats;
use crate::embedding::{Embedding, Score};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::par;
use crate::pmi::{Implicit, SparseMatrix};

pub const DEFAULT_OVERSAMPLING: usize = 8;
pub const DEFAULT_POWER_ITERATIONS: usize = 4;
/// Largest matrix side accepted by the full-SVD consistency check.
pub const FULL_SVD_LIMIT: usize = 500;
pub const DEFAULT_MAX_REFINEMENTS: usize = 200;
pub const DEFAULT_SVD_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SvdResult {
    /// rows x d, orthonormal columns
    pub u: DMatrix<f64>,
    /// non-increasing, non-negative
    pub sigma: Vec<f64>,
    /// cols x d, orthonormal columns
    pub v: DMatrix<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// U·diag(sigma)·Vᵀ
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// max(‖UᵀU - I‖, ‖VᵀV - I‖) entrywise.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.rank();
        let eye = DMatrix::<f64>::identity(d, d);
        let eu = (self.u.transpose() * &self.u - &eye).amax();
        let ev = (self.v.transpose() * &self.v - &eye).amax();
        eu.max(ev)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdOptions {
    pub oversampling: usize,
    pub power_iterations: usize,
    /// Extra power iterations run after the fixed ones until the top-d
    /// singular values move by less than `tolerance` (relative).
    pub max_refinements: usize,
    pub tolerance: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversampling: DEFAULT_OVERSAMPLING,
            power_iterations: DEFAULT_POWER_ITERATIONS,
            max_refinements: DEFAULT_MAX_REFINEMENTS,
            tolerance: DEFAULT_SVD_TOLERANCE,
        }
    }
}

/// Matrix operand for the randomized solver.
enum Operand {
    Sparse {
        rows: usize,
        cols: usize,
        csr: (Vec<usize>, Vec<(usize, f64)>),
        csr_t: (Vec<usize>, Vec<(usize, f64)>),
    },
    Dense(DMatrix<f64>),
}

impl Operand {
    fn from_sparse(m: &SparseMatrix) -> Result<Self> {
        match m.implicit() {
            Implicit::Undefined => Err(Error::MarkerContamination),
            Implicit::Value(_) => Ok(Operand::Dense(m.to_dense()?)),
            Implicit::Zero => Ok(Operand::Sparse {
                rows: m.rows(),
                cols: m.cols(),
                csr: m.csr(),
                csr_t: m.transpose().csr(),
            }),
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            Operand::Sparse { rows, cols, .. } => (*rows, *cols),
            Operand::Dense(m) => m.shape(),
        }
    }

    /// A·X
    fn mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Operand::Sparse { rows, csr, .. } => csr_mul(*rows, csr, x),
            Operand::Dense(m) => m * x,
        }
    }

    /// Aᵀ·X
    fn tr_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Operand::Sparse { cols, csr_t, .. } => csr_mul(*cols, csr_t, x),
            Operand::Dense(m) => m.tr_mul(x),
        }
    }
}

fn csr_mul(rows: usize, (offsets, entries): &(Vec<usize>, Vec<(usize, f64)>), x: &DMatrix<f64>) -> DMatrix<f64> {
    let width = x.ncols();
    let mut out = vec![0.0; rows * width];
    par::for_each_row_mut(&mut out, width, |r, row| {
        for &(c, v) in &entries[offsets[r]..offsets[r + 1]] {
            for (j, o) in row.iter_mut().enumerate() {
                *o += v * x[(c, j)];
            }
        }
    });
    DMatrix::from_row_slice(rows, width, &out)
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

/// Top-`d` singular triple by randomized subspace iteration.
pub fn truncated_svd(m: &SparseMatrix, d: usize, seed: u64) -> Result<SvdResult> {
    truncated_svd_with(m, d, seed, SvdOptions::default())
}

pub fn truncated_svd_with(m: &SparseMatrix, d: usize, seed: u64, opts: SvdOptions) -> Result<SvdResult> {
    let op = Operand::from_sparse(m)?;
    randomized_svd(&op, d, seed, opts)
}

/// Randomized SVD of a dense matrix.
pub fn truncated_svd_dense(m: &DMatrix<f64>, d: usize, seed: u64) -> Result<SvdResult> {
    randomized_svd(&Operand::Dense(m.clone()), d, seed, SvdOptions::default())
}

fn randomized_svd(op: &Operand, d: usize, seed: u64, opts: SvdOptions) -> Result<SvdResult> {
    let (rows, cols) = op.shape();
    let min_side = rows.min(cols);
    if d == 0 || d > min_side {
        return Err(Error::DimensionMismatch(format!(
            "rank {d} requested for a {rows}x{cols} matrix"
        )));
    }
    let width = (d + opts.oversampling).min(min_side);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(cols, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(op.mul(&omega));
    let power = |q: &DMatrix<f64>| orthonormal_basis(op.mul(&orthonormal_basis(op.tr_mul(q))));
    for _ in 0..opts.power_iterations {
        q = power(&q);
    }
    // B = Qᵀ A, formed as (Aᵀ Q)ᵀ
    let mut small = dense_svd(&op.tr_mul(&q).transpose());
    for _ in 0..opts.max_refinements {
        let next_q = power(&q);
        let next = dense_svd(&op.tr_mul(&next_q).transpose());
        let moved = small.sigma[..d]
            .iter()
            .zip(&next.sigma[..d])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next_q;
        small = next;
        if moved <= opts.tolerance * small.sigma[0].max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let ub = small.u.columns(0, d).into_owned();
    Ok(SvdResult {
        u: &q * ub,
        sigma: small.sigma[..d].to_vec(),
        v: small.v.columns(0, d).into_owned(),
    })
}

/// Full thin SVD with singular values sorted in non-increasing order.
pub fn dense_svd(m: &DMatrix<f64>) -> SvdResult {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma = order.iter().map(|&i| svd.singular_values[i].max(0.0)).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, j| u[(r, order[j])]);
    let v = DMatrix::from_fn(v_t.ncols(), order.len(), |r, j| v_t[(order[j], r)]);
    SvdResult { u, sigma, v }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Flavor {
    /// U·Σ
    #[default]
    Plain,
    /// U·√Σ
    Symmetric,
}

impl FromStr for Flavor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Flavor::Plain),
            "symmetric" => Ok(Flavor::Symmetric),
            _ => Err(Error::InvalidConfig(format!("unknown flavor `{s}`"))),
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Plain => "plain",
            Flavor::Symmetric => "symmetric",
        })
    }
}

pub fn word_vector_matrix(svd: &SvdResult, flavor: Flavor) -> DMatrix<f64> {
    let mut w = svd.u.clone();
    for (j, s) in svd.sigma.iter().enumerate() {
        let scale = match flavor {
            Flavor::Plain => *s,
            Flavor::Symmetric => s.sqrt(),
        };
        w.column_mut(j).scale_mut(scale);
    }
    w
}

pub fn word_vectors(svd: &SvdResult, flavor: Flavor, labels: &[String]) -> Result<Embedding> {
    Embedding::from_matrix(labels.to_vec(), &word_vector_matrix(svd, flavor))
}

/// max |A·Aᵀ - B·Bᵀ| over all entries.
pub fn gram_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch(format!("{} vs {} rows", a.nrows(), b.nrows())));
    }
    Ok((a * a.transpose() - b * b.transpose()).amax())
}

/// Largest entry of |W·Wᵀ - M·Mᵀ| for full-rank SVD word vectors of `m`.
pub fn consistency_report(m: &SparseMatrix, flavor: Flavor) -> Result<f64> {
    if m.rows().max(m.cols()) > FULL_SVD_LIMIT {
        return Err(Error::DimensionMismatch(format!(
            "full SVD limited to {FULL_SVD_LIMIT} rows/cols, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    consistency_gap_dense(&m.to_dense()?, flavor)
}

pub fn consistency_gap_dense(m: &DMatrix<f64>, flavor: Flavor) -> Result<f64> {
    let svd = dense_svd(m);
    gram_gap(&word_vector_matrix(&svd, flavor), m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedTarget {
    pub row: u32,
    pub col: u32,
    pub target: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedFactorizationProblem {
    rows: usize,
    cols: usize,
    entries: Vec<WeightedTarget>,
    pub dim: usize,
    pub epochs: usize,
    pub ridge: f64,
    /// Stop when a full sweep improves the objective by less than this
    /// fraction.
    pub tolerance: f64,
}

impl WeightedFactorizationProblem {
    pub fn new(rows: usize, cols: usize, entries: Vec<WeightedTarget>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("dimension must be at least 1".into()));
        }
        if entries.is_empty() {
            return Err(Error::Domain("empty support".into()));
        }
        for e in &entries {
            if e.row as usize >= rows || e.col as usize >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({}, {}) outside {rows}x{cols}",
                    e.row, e.col
                )));
            }
            if !e.target.is_finite() {
                return Err(Error::MarkerContamination);
            }
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::Domain(format!("weight {} must be finite and >= 0", e.weight)));
            }
        }
        Ok(WeightedFactorizationProblem {
            rows,
            cols,
            entries,
            dim,
            epochs: 100,
            ridge: 1e-8,
            tolerance: 1e-8,
        })
    }

    /// Every entry of `targets` with the matching entry of `weights`.
    pub fn from_dense(targets: &DMatrix<f64>, weights: &DMatrix<f64>, dim: usize) -> Result<Self> {
        if targets.shape() != weights.shape() {
            return Err(Error::DimensionMismatch("targets and weights differ in shape".into()));
        }
        let entries = (0..targets.nrows())
            .flat_map(|r| (0..targets.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| WeightedTarget {
                row: r as u32,
                col: c as u32,
                target: targets[(r, c)],
                weight: weights[(r, c)],
            })
            .collect();
        Self::new(targets.nrows(), targets.ncols(), entries, dim)
    }

    /// Targets x*(w,c) weighted by α(w,c) from the closed-form solutions.
    pub fn from_pair_solutions(
        stats: &CooccurrenceStats,
        kind: LossKind,
        k: f64,
        include_absent: bool,
        dim: usize,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (w, c, sol) in solve_pairs(stats, kind, k, include_absent)? {
            let Score::Finite(target) = sol.x_star else {
                return Err(Error::MarkerContamination);
            };
            let weight = sol
                .alpha
                .ok_or_else(|| Error::Domain(format!("{kind} loss has no curvature weights")))?;
            entries.push(WeightedTarget {
                row: w as u32,
                col: c as u32,
                target,
                weight,
            });
        }
        Self::new(stats.num_words(), stats.num_words(), entries, dim)
    }

    /// Stored values of `targets` weighted by the same-position values of
    /// `weights`; both must share their support.
    /// Unstored cells carry zero weight when `weights` is given, so an
    /// undefined implicit value is only refused in the unweighted case.
    pub fn from_sparse(targets: &SparseMatrix, weights: Option<&SparseMatrix>, dim: usize) -> Result<Self> {
        if weights.is_none() && targets.implicit() == Implicit::Undefined {
            return Err(Error::MarkerContamination);
        }
        if targets.entries().iter().any(|e| !e.2.is_finite()) {
            return Err(Error::MarkerContamination);
        }
        let entries = targets
            .entries()
            .iter()
            .map(|&(r, c, x)| {
                let weight = match weights {
                    None => 1.0,
                    Some(wm) => wm
                        .stored(r as usize, c as usize)
                        .ok_or_else(|| Error::DimensionMismatch(format!("no weight for target ({r}, {c})")))?,
                };
                Ok(WeightedTarget {
                    row: r,
                    col: c,
                    target: x,
                    weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(wm) = weights {
            if wm.nnz() != entries.len() {
                return Err(Error::DimensionMismatch("weights and targets differ in support".into()));
            }
        }
        Self::new(targets.rows(), targets.cols(), entries, dim)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[WeightedTarget] {
        &self.entries
    }

    /// Objective at row-major factors `w` (rows x dim) and `c` (cols x dim).
    pub fn objective(&self, w: &[f64], c: &[f64]) -> f64 {
        let norm = |m: &[f64]| m.iter().map(|x| x * x).sum::<f64>();
        self.fit(w, c) + self.ridge * (norm(w) + norm(c))
    }

    /// Weighted squared error alone, without the ridge term.
    pub fn fit(&self, w: &[f64], c: &[f64]) -> f64 {
        let d = self.dim;
        let by_row = self.row_index();
        par::sum_range(self.rows, |r| {
            by_row[r]
                .iter()
                .map(|&i| {
                    let e = &self.entries[i];
                    let wr = &w[r * d..(r + 1) * d];
                    let cc = &c[e.col as usize * d..(e.col as usize + 1) * d];
                    let resid = dot(wr, cc) - e.target;
                    0.5 * e.weight * resid * resid
                })
                .sum::<f64>()
        })
    }

    fn row_index(&self) -> Vec<Vec<usize>> {
        let mut idx = vec![Vec::new(); self.rows];
        for (i, e) in self.entries.iter().enumerate() {
            idx[e.row as usize].push(i);
        }
        idx
    }

    fn col_index(&self) -> Vec<Vec<usize>> {
        let mut idx = vec![Vec::new(); self.cols];
        for (i, e) in self.entries.iter().enumerate() {
            idx[e.col as usize].push(i);
        }
        idx
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
pub struct AlsOutcome {
    /// rows x dim
    pub words: DMatrix<f64>,
    /// cols x dim
    pub contexts: DMatrix<f64>,
    /// Objective at initialization and after every half-sweep.
    pub history: Vec<f64>,
    /// Weighted squared error of the returned factors.
    pub fit: f64,
}

impl AlsOutcome {
    pub fn objective(&self) -> f64 {
        *self.history.last().expect("history starts with the initial objective")
    }

    pub fn into_embedding_pair(self, labels: &[String]) -> Result<EmbeddingPair> {
        EmbeddingPair::new(
            Embedding::from_matrix(labels.to_vec(), &self.words)?,
            Embedding::from_matrix(labels.to_vec(), &self.contexts)?,
        )
    }
}

/// Exact block minimization over the rows of one factor with the other held
/// fixed: (Σ α·c·cᵀ + 2·ridge·I)·w = Σ α·x·c per row.
fn update_factor(
    problem: &WeightedFactorizationProblem,
    index: &[Vec<usize>],
    fixed: &[f64],
    target: &mut [f64],
    updating_rows: bool,
) {
    let d = problem.dim;
    par::for_each_row_mut(target, d, |r, out| {
        let support = &index[r];
        if support.is_empty() {
            out.iter_mut().for_each(|x| *x = 0.0);
            return;
        }
        let mut gram = DMatrix::<f64>::zeros(d, d);
        let mut rhs = DVector::<f64>::zeros(d);
        for &i in support {
            let e = &problem.entries[i];
            let other = if updating_rows { e.col } else { e.row } as usize;
            let v = &fixed[other * d..(other + 1) * d];
            for a in 0..d {
                rhs[a] += e.weight * e.target * v[a];
                for b in a..d {
                    gram[(a, b)] += e.weight * v[a] * v[b];
                }
            }
        }
        for a in 0..d {
            gram[(a, a)] += 2.0 * problem.ridge;
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        let solution = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .unwrap_or_else(|_| DVector::zeros(d)),
        };
        out.copy_from_slice(solution.as_slice());
    });
}

/// Alternating least squares with a per-half-sweep monotonicity check.
pub fn weighted_factorize(problem: &WeightedFactorizationProblem, seed: u64) -> Result<AlsOutcome> {
    let d = problem.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (d as f64).sqrt();
    let mut init = |n: usize| -> Vec<f64> {
        (0..n * d)
            .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect()
    };
    let mut w = init(problem.rows);
    let mut c = init(problem.cols);
    let rows = problem.row_index();
    let cols = problem.col_index();
    let mut history = vec![problem.objective(&w, &c)];
    let mut half_sweep = 0;
    let check = |value: f64, history: &mut Vec<f64>, half_sweep: &mut usize| -> Result<()> {
        *half_sweep += 1;
        let before = *history.last().unwrap();
        if !value.is_finite() || value - before > 1e-9 * before.abs().max(1.0) {
            return Err(Error::Divergence {
                before,
                after: value,
                half_sweep: *half_sweep,
            });
        }
        history.push(value);
        Ok(())
    };
    for _ in 0..problem.epochs {
        let start = *history.last().unwrap();
        update_factor(problem, &rows, &c, &mut w, true);
        check(problem.objective(&w, &c), &mut history, &mut half_sweep)?;
        update_factor(problem, &cols, &w, &mut c, false);
        check(problem.objective(&w, &c), &mut history, &mut half_sweep)?;
        let end = *history.last().unwrap();
        if end <= f64::MIN_POSITIVE || (start - end) / start < problem.tolerance {
            break;
        }
    }
    Ok(AlsOutcome {
        fit: problem.fit(&w, &c),
        words: DMatrix::from_row_slice(problem.rows, d, &w),
        contexts: DMatrix::from_row_slice(problem.cols, d, &c),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> SparseMatrix {
        let n = values.len();
        SparseMatrix::from_dense(&DMatrix::from_diagonal(&DVector::from_column_slice(values)).resize(n, n, 0.0))
    }

    #[test]
    fn identity_svd() {
        let svd = truncated_svd(&SparseMatrix::identity(2), 2, 0).unwrap();
        assert!((svd.sigma[0] - 1.0).abs() < 1e-12 && (svd.sigma[1] - 1.0).abs() < 1e-12);
        assert!((svd.reconstruct() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        assert!(svd.orthonormality_error() < 1e-8);
    }

    #[test]
    fn dominant_axis() {
        let svd = truncated_svd(&diag(&[3.0, 1.0]), 1, 0).unwrap();
        assert!((svd.sigma[0] - 3.0).abs() < 1e-12);
        let approx = svd.reconstruct();
        assert!((approx[(0, 0)] - 3.0).abs() < 1e-12);
        assert!(approx[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn zero_and_rank_deficient_matrices() {
        let zero = SparseMatrix::new(4, 4, vec![], Implicit::Zero).unwrap();
        let svd = truncated_svd(&zero, 2, 0).unwrap();
        assert!(svd.sigma.iter().all(|&s| s.abs() < 1e-12));
        assert!(svd.orthonormality_error() < 1e-8);

        let rank_one = SparseMatrix::new(3, 3, vec![(0, 0, 2.0), (0, 1, 2.0)], Implicit::Zero).unwrap();
        let svd = truncated_svd(&rank_one, 3, 1).unwrap();
        assert!((svd.sigma[0] - 8f64.sqrt()).abs() < 1e-12);
        assert!(svd.sigma[1].abs() < 1e-12 && svd.sigma[2].abs() < 1e-12);
        assert!(svd.orthonormality_error() < 1e-8);
    }

    #[test]
    fn svd_rejects_markers_and_bad_rank() {
        let m = SparseMatrix::new(2, 2, vec![(0, 1, 1.0)], Implicit::Undefined).unwrap();
        assert_eq!(truncated_svd(&m, 1, 0).unwrap_err().category(), "marker-contamination");
        assert!(truncated_svd(&SparseMatrix::identity(2), 3, 0).is_err());
        assert!(truncated_svd(&SparseMatrix::identity(2), 0, 0).is_err());
    }

    #[test]
    fn implicit_constant_is_densified() {
        let m = SparseMatrix::new(2, 2, vec![(0, 0, 1.0), (1, 1, 1.0)], Implicit::Value(-1.0)).unwrap();
        let svd = truncated_svd(&m, 2, 0).unwrap();
        assert!((svd.reconstruct() - m.to_dense().unwrap()).amax() < 1e-12);
    }

    #[test]
    fn flavors() {
        let svd = SvdResult {
            u: DMatrix::identity(2, 2),
            sigma: vec![4.0, 1.0],
            v: DMatrix::identity(2, 2),
        };
        let plain = word_vector_matrix(&svd, Flavor::Plain);
        let sym = word_vector_matrix(&svd, Flavor::Symmetric);
        assert_eq!(plain, DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]));
        assert_eq!(sym, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));

        let unit = dense_svd(&DMatrix::identity(3, 3));
        assert_eq!(
            word_vector_matrix(&unit, Flavor::Plain),
            word_vector_matrix(&unit, Flavor::Symmetric)
        );
    }

    #[test]
    fn consistency_examples() {
        let eye = SparseMatrix::identity(3);
        assert!(consistency_report(&eye, Flavor::Plain).unwrap() < 1e-12);
        assert!(consistency_report(&eye, Flavor::Symmetric).unwrap() < 1e-12);
        let m = diag(&[4.0, 1.0]);
        assert!(consistency_report(&m, Flavor::Plain).unwrap() < 1e-12);
        assert!((consistency_report(&m, Flavor::Symmetric).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn single_entry_problem_is_solved() {
        let p = WeightedFactorizationProblem::new(
            1,
            1,
            vec![WeightedTarget {
                row: 0,
                col: 0,
                target: 2.0,
                weight: 5.0,
            }],
            1,
        )
        .unwrap();
        let out = weighted_factorize(&p, 3).unwrap();
        assert!((out.words[(0, 0)] * out.contexts[(0, 0)] - 2.0).abs() < 1e-6);
        assert!(out.objective() < 1e-6);
    }

    #[test]
    fn problem_validation() {
        let bad = |t: f64, w: f64| {
            WeightedFactorizationProblem::new(
                2,
                2,
                vec![WeightedTarget {
                    row: 0,
                    col: 1,
                    target: t,
                    weight: w,
                }],
                1,
            )
        };
        assert_eq!(
            bad(f64::NEG_INFINITY, 1.0).unwrap_err().category(),
            "marker-contamination"
        );
        assert!(bad(1.0, -1.0).is_err());
        assert!(WeightedFactorizationProblem::new(2, 2, vec![], 1).is_err());
    }

    #[test]
    fn history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = DMatrix::from_fn(8, 6, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let w = DMatrix::from_fn(8, 6, |_, _| rand::Rng::gen_range(&mut rng, 0.0..3.0));
        let mut p = WeightedFactorizationProblem::from_dense(&t, &w, 3).unwrap();
        p.epochs = 30;
        let out = weighted_factorize(&p, 0).unwrap();
        assert_eq!(out.history.len() % 2, 1);
        assert!(out.history.windows(2).all(|h| h[1] <= h[0] + 1e-9 * h[0].max(1.0)));
    }
}

//! PMI, PPMI, shifted PMI and shifted PPMI matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::config::RunConfig;
use crate::corpus::CooccurrenceStats;
use crate::error::{Error, Result};
use crate::par;
use crate::triplets::TripletFile;

/// Value of entries that are not stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Implicit {
    Zero,
    /// Absent entries are undefined (the negative-infinity marker).
    Undefined,
    Value(f64),
}

impl fmt::Display for Implicit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Implicit::Zero => f.write_str("0"),
            Implicit::Undefined => f.write_str("NEG_INF"),
            Implicit::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Implicit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Implicit::Zero),
            "NEG_INF" => Ok(Implicit::Undefined),
            v => v
                .parse()
                .map(|x: f64| if x == 0.0 { Implicit::Zero } else { Implicit::Value(x) })
                .map_err(|_| Error::InvalidConfig(format!("bad implicit value `{s}`"))),
        }
    }
}

/// Triplet-form sparse matrix, entries sorted by (row, col).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(u32, u32, f64)>,
    implicit: Implicit,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<(u32, u32, f64)>, implicit: Implicit) -> Result<Self> {
        let mut entries = entries;
        for &(r, c, v) in &entries {
            if r as usize >= rows || c as usize >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Domain(format!("stored entry ({r}, {c}) is {v}")));
            }
        }
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        if entries.windows(2).any(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::Domain("duplicate matrix entries".into()));
        }
        Ok(SparseMatrix {
            rows,
            cols,
            entries,
            implicit,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != 0.0 {
                    entries.push((r as u32, c as u32, v));
                }
            }
        }
        SparseMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
            implicit: Implicit::Zero,
        }
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n as u32).map(|i| (i, i, 1.0)).collect();
        SparseMatrix {
            rows: n,
            cols: n,
            entries,
            implicit: Implicit::Zero,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn implicit(&self) -> Implicit {
        self.implicit
    }

    /// Stored value, or `None` when absent.
    pub fn stored(&self, r: usize, c: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&(r as u32, c as u32), |&(a, b, _)| (a, b))
            .ok()
            .map(|i| self.entries[i].2)
    }

    /// Entry value with the implicit value filled in; `None` for undefined.
    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        match (self.stored(r, c), self.implicit) {
            (Some(v), _) => Some(v),
            (None, Implicit::Zero) => Some(0.0),
            (None, Implicit::Value(v)) => Some(v),
            (None, Implicit::Undefined) => None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && self
                .entries
                .iter()
                .all(|&(r, c, v)| self.stored(c as usize, r as usize) == Some(v))
    }

    /// Dense copy; fails when absent entries are undefined.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let fill = match self.implicit {
            Implicit::Zero => 0.0,
            Implicit::Value(v) => v,
            Implicit::Undefined => return Err(Error::MarkerContamination),
        };
        let mut m = DMatrix::from_element(self.rows, self.cols, fill);
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] = v;
        }
        Ok(m)
    }

    /// Compressed rows (offsets, (col, value)) for repeated products.
    pub(crate) fn csr(&self) -> (Vec<usize>, Vec<(usize, f64)>) {
        let mut offsets = vec![0usize; self.rows + 1];
        for &(r, _, _) in &self.entries {
            offsets[r as usize + 1] += 1;
        }
        for i in 0..self.rows {
            offsets[i + 1] += offsets[i];
        }
        let cols = self.entries.iter().map(|&(_, c, v)| (c as usize, v)).collect();
        (offsets, cols)
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
            implicit: self.implicit,
        }
    }

    /// Triplet file with header `rows cols <label> <k>`; the implicit value
    /// is recorded in the provenance block.
    pub fn to_triplets(&self, mut config: RunConfig, label: &str, k: f64) -> TripletFile {
        config.set("implicit", self.implicit);
        TripletFile {
            config,
            header: format!("{} {} {label} {k}", self.rows, self.cols),
            entries: self.entries.clone(),
        }
    }

    pub fn from_triplets(file: &TripletFile, origin: &str) -> Result<Self> {
        let fields = file.header_fields();
        let dim = |i: usize| -> Result<usize> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(origin, 0, "header must start with `rows cols`"))
        };
        let implicit = match file.config.get("implicit") {
            Some(s) => s.parse()?,
            None => Implicit::Zero,
        };
        Self::new(dim(0)?, dim(1)?, file.entries.clone(), implicit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PmiVariant {
    Pmi,
    Ppmi,
    Spmi,
    Sppmi,
}

impl PmiVariant {
    fn positive(self) -> bool {
        matches!(self, PmiVariant::Ppmi | PmiVariant::Sppmi)
    }

    fn shifted(self) -> bool {
        matches!(self, PmiVariant::Spmi | PmiVariant::Sppmi)
    }
}

impl FromStr for PmiVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pmi" => Ok(PmiVariant::Pmi),
            "ppmi" => Ok(PmiVariant::Ppmi),
            "spmi" => Ok(PmiVariant::Spmi),
            "sppmi" => Ok(PmiVariant::Sppmi),
            _ => Err(Error::InvalidConfig(format!("unknown PMI variant `{s}`"))),
        }
    }
}

impl fmt::Display for PmiVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PmiVariant::Pmi => "pmi",
            PmiVariant::Ppmi => "ppmi",
            PmiVariant::Spmi => "spmi",
            PmiVariant::Sppmi => "sppmi",
        })
    }
}

/// ln(#(w,c)·|D| / (#(w,.)·#(.,c))), `None` when the pair or a marginal is
/// zero (undefined).
pub fn pmi_value(stats: &CooccurrenceStats, w: usize, c: usize) -> Option<f64> {
    pmi_from_counts(
        stats.get(w, c),
        stats.row_marginal(w),
        stats.col_marginal(c),
        stats.total(),
    )
}

pub fn pmi_from_counts(n_wc: f64, n_w: f64, n_c: f64, total: f64) -> Option<f64> {
    if n_wc <= 0.0 || n_w <= 0.0 || n_c <= 0.0 || total <= 0.0 {
        return None;
    }
    Some((n_wc * total / (n_w * n_c)).ln())
}

pub(crate) fn check_k(k: f64) -> Result<()> {
    if k >= 1.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidK(k))
    }
}

/// Build a |V|x|V| PMI-family matrix. `k` is ignored by the unshifted
/// variants.
pub fn build_matrix(stats: &CooccurrenceStats, variant: PmiVariant, k: f64) -> Result<SparseMatrix> {
    check_k(k)?;
    if stats.total() <= 0.0 {
        return Err(Error::Domain("co-occurrence table is empty".into()));
    }
    let shift = if variant.shifted() { k.ln() } else { 0.0 };
    let values = par::map_slice(stats.pairs(), |&(w, c, _)| {
        pmi_value(stats, w as usize, c as usize).map(|p| p - shift)
    });
    let entries = stats
        .pairs()
        .iter()
        .zip(values)
        .filter_map(|(&(w, c, _), v)| {
            let v = v?;
            if variant.positive() {
                (v > 0.0).then_some((w, c, v))
            } else {
                Some((w, c, v))
            }
        })
        .collect();
    let implicit = if variant.positive() {
        Implicit::Zero
    } else {
        Implicit::Undefined
    };
    SparseMatrix::new(stats.num_words(), stats.num_words(), entries, implicit)
}

//! Probability vectors, column-stochastic matrices, and entropy in bits.
//!
//! Conventions used throughout the crate: a channel matrix has one column
//! per input symbol and one row per output symbol, so columns are
//! conditional output distributions and `t.apply(p)` is the output
//! distribution `T p`. Inputs are validated once at construction and then
//! trusted; tiny negative noise (down to -1e-12) is clipped and the vector
//! renormalized so downstream code never sees a negative probability.

use crate::{Error, Result};

/// Tolerance on sums when validating stochasticity.
pub const SUM_TOL: f64 = 1e-9;
/// Sums within this of 1 are float dust and left unrescaled.
const RESCALE_TOL: f64 = 1e-13;
/// Entries in [NEG_TOL, 0) are treated as float noise and clipped to zero.
pub const NEG_TOL: f64 = -1e-12;

// --- probability vectors ---

/// A point of the probability simplex, validated and renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    /// Validates and renormalizes `entries` into a distribution.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidProbVector("empty vector".into()));
        }
        for (i, &x) in entries.iter().enumerate() {
            if !x.is_finite() || x < NEG_TOL {
                return Err(Error::InvalidProbVector(format!(
                    "entry {i} is {x}, below the clip window"
                )));
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidProbVector(format!(
                "entries sum to {sum}, not 1 within {SUM_TOL}"
            )));
        }
        Ok(Self::renormalized(entries))
    }

    /// Clips tiny negatives and, if the sum has drifted beyond float
    /// dust, rescales to a unit sum. Entries that already sum to 1 within
    /// a few ulps are stored untouched so construction is idempotent and
    /// round-trips are exact. The caller guarantees the input is already
    /// a distribution up to float noise.
    fn renormalized(mut entries: Vec<f64>) -> Self {
        for x in entries.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > RESCALE_TOL {
            for x in entries.iter_mut() {
                *x /= sum;
            }
        }
        ProbVector { entries }
    }

    /// Uniform distribution on `dim` outcomes.
    pub fn uniform(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        ProbVector {
            entries: vec![1.0 / dim as f64; dim],
        }
    }

    /// Point mass on outcome `index`.
    pub fn point_mass(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange(format!(
                "point mass at {index} in dimension {dim}"
            )));
        }
        let mut entries = vec![0.0; dim];
        entries[index] = 1.0;
        Ok(ProbVector { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Shannon entropy of `p` in bits.
pub fn entropy(p: &ProbVector) -> f64 {
    entropy_of(p.entries())
}

/// Entropy of a raw nonnegative slice; 0 log 0 = 0.
pub(crate) fn entropy_of(xs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &x in xs {
        if x > 0.0 {
            h -= x * x.log2();
        }
    }
    h
}

// --- channel matrices ---

/// A column-stochastic matrix: rows index outputs, columns index inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    /// Row-major storage, `data[i * n_in + j]` is p(output i | input j).
    data: Vec<f64>,
    n_out: usize,
    n_in: usize,
}

impl ChannelMatrix {
    /// Builds a matrix from rows, validating column stochasticity.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_out = rows.len();
        if n_out == 0 {
            return Err(Error::InvalidMatrix("no rows".into()));
        }
        let n_in = rows[0].len();
        if n_in == 0 {
            return Err(Error::InvalidMatrix("no columns".into()));
        }
        if rows.iter().any(|r| r.len() != n_in) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(n_out * n_in);
        for row in &rows {
            data.extend_from_slice(row);
        }
        for (k, &x) in data.iter().enumerate() {
            if !x.is_finite() || x < NEG_TOL {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({}, {}) is {x}",
                    k / n_in,
                    k % n_in
                )));
            }
        }
        for j in 0..n_in {
            let sum: f64 = (0..n_out).map(|i| data[i * n_in + j]).sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidMatrix(format!(
                    "column {j} sums to {sum}, not 1 within {SUM_TOL}"
                )));
            }
        }
        let mut m = ChannelMatrix { data, n_out, n_in };
        m.renormalize_columns();
        Ok(m)
    }

    /// Clips tiny negatives and rescales any column whose sum has drifted
    /// beyond float dust; columns already unit within a few ulps are kept
    /// untouched so round-trips are exact.
    fn renormalize_columns(&mut self) {
        for x in self.data.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        for j in 0..self.n_in {
            let sum: f64 = (0..self.n_out).map(|i| self.data[i * self.n_in + j]).sum();
            if (sum - 1.0).abs() > RESCALE_TOL {
                for i in 0..self.n_out {
                    self.data[i * self.n_in + j] /= sum;
                }
            }
        }
    }

    /// Builds a matrix whose columns are the given distributions.
    pub fn from_columns(cols: &[ProbVector]) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::InvalidMatrix("no columns".into()));
        }
        let n_out = cols[0].dim();
        if cols.iter().any(|c| c.dim() != n_out) {
            return Err(Error::DimensionMismatch(
                "columns have mixed dimensions".into(),
            ));
        }
        let n_in = cols.len();
        let mut data = vec![0.0; n_out * n_in];
        for (j, col) in cols.iter().enumerate() {
            for (i, &x) in col.entries().iter().enumerate() {
                data[i * n_in + j] = x;
            }
        }
        Ok(ChannelMatrix { data, n_out, n_in })
    }

    /// Identity channel on `n` symbols.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        ChannelMatrix { data, n_out: n, n_in: n }
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_in + j]
    }

    /// Row `i` as a slice (length `n_in`).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_in..(i + 1) * self.n_in]
    }

    /// Column `j` as a raw vector (length `n_out`).
    pub fn column_raw(&self, j: usize) -> Vec<f64> {
        (0..self.n_out).map(|i| self.data[i * self.n_in + j]).collect()
    }

    /// Column `j` as a distribution.
    pub fn column(&self, j: usize) -> Result<ProbVector> {
        if j >= self.n_in {
            return Err(Error::IndexOutOfRange(format!(
                "column {j} of a {}x{} matrix",
                self.n_out, self.n_in
            )));
        }
        Ok(ProbVector::renormalized(self.column_raw(j)))
    }

    /// Entropy in bits of the conditional output distribution in column `j`.
    pub fn column_entropy(&self, j: usize) -> Result<f64> {
        if j >= self.n_in {
            return Err(Error::IndexOutOfRange(format!(
                "column {j} of a {}x{} matrix",
                self.n_out, self.n_in
            )));
        }
        Ok(entropy_of(&self.column_raw(j)))
    }

    /// Output distribution `T p`.
    pub fn apply(&self, p: &ProbVector) -> Result<ProbVector> {
        if p.dim() != self.n_in {
            return Err(Error::DimensionMismatch(format!(
                "applying a {}x{} matrix to a vector of dimension {}",
                self.n_out,
                self.n_in,
                p.dim()
            )));
        }
        Ok(ProbVector::renormalized(self.apply_raw(p.entries())))
    }

    /// `T x` without constructing a ProbVector; used by hot loops.
    pub(crate) fn apply_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_out];
        for i in 0..self.n_out {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.n_in {
                acc += row[j] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Composition `self . inner`: feed inner's output into self.
    pub fn compose(&self, inner: &ChannelMatrix) -> Result<ChannelMatrix> {
        if self.n_in != inner.n_out {
            return Err(Error::DimensionMismatch(format!(
                "composing {}x{} with {}x{}",
                self.n_out, self.n_in, inner.n_out, inner.n_in
            )));
        }
        let n_out = self.n_out;
        let n_in = inner.n_in;
        let mut data = vec![0.0; n_out * n_in];
        for i in 0..n_out {
            for j in 0..n_in {
                let mut acc = 0.0;
                for k in 0..self.n_in {
                    acc += self.get(i, k) * inner.get(k, j);
                }
                data[i * n_in + j] = acc;
            }
        }
        let mut m = ChannelMatrix { data, n_out, n_in };
        m.renormalize_columns();
        Ok(m)
    }

    /// Max-abs entrywise difference; matrices must have equal shape.
    pub fn max_abs_diff(&self, other: &ChannelMatrix) -> Result<f64> {
        if self.n_out != other.n_out || self.n_in != other.n_in {
            return Err(Error::DimensionMismatch(format!(
                "comparing {}x{} with {}x{}",
                self.n_out, self.n_in, other.n_out, other.n_in
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

// --- the channel pair ---

/// A degraded interference channel: one Y1-matrix per interferer symbol
/// plus the degrading matrix from Y1 to Y2.
#[derive(Debug, Clone)]
pub struct Ddic {
    t_family: Vec<ChannelMatrix>,
    t_prime: ChannelMatrix,
}

impl Ddic {
    /// Validates dimension consistency across the family and `t_prime`.
    pub fn new(t_family: Vec<ChannelMatrix>, t_prime: ChannelMatrix) -> Result<Self> {
        if t_family.is_empty() {
            return Err(Error::InvalidMatrix("empty channel family".into()));
        }
        let y1 = t_family[0].n_out();
        let x1 = t_family[0].n_in();
        for (k, t) in t_family.iter().enumerate() {
            if t.n_out() != y1 || t.n_in() != x1 {
                return Err(Error::DimensionMismatch(format!(
                    "family member {k} is {}x{}, expected {y1}x{x1}",
                    t.n_out(),
                    t.n_in()
                )));
            }
        }
        if t_prime.n_in() != y1 {
            return Err(Error::DimensionMismatch(format!(
                "t_prime has {} inputs but the family outputs {y1} symbols",
                t_prime.n_in()
            )));
        }
        Ok(Ddic { t_family, t_prime })
    }

    pub fn x1_size(&self) -> usize {
        self.t_family[0].n_in()
    }

    pub fn x2_size(&self) -> usize {
        self.t_family.len()
    }

    pub fn y1_size(&self) -> usize {
        self.t_family[0].n_out()
    }

    pub fn y2_size(&self) -> usize {
        self.t_prime.n_out()
    }

    /// The Y1-matrix for interferer symbol `x2`.
    pub fn t(&self, x2: usize) -> Result<&ChannelMatrix> {
        self.t_family.get(x2).ok_or_else(|| {
            Error::IndexOutOfRange(format!("x2 = {x2}, family size {}", self.x2_size()))
        })
    }

    pub fn family(&self) -> &[ChannelMatrix] {
        &self.t_family
    }

    pub fn t_prime(&self) -> &ChannelMatrix {
        &self.t_prime
    }

    /// The end-to-end X1 -> Y2 matrix for interferer symbol `x2`.
    pub fn y2_channel(&self, x2: usize) -> Result<ChannelMatrix> {
        self.t_prime.compose(self.t(x2)?)
    }

    /// The whole composed family, one matrix per x2.
    pub fn y2_family(&self) -> Result<Vec<ChannelMatrix>> {
        (0..self.x2_size()).map(|x2| self.y2_channel(x2)).collect()
    }
}

//! Dense containers for probability matrices and contingency tables.
//!
//! Both containers are row-major and immutable once built. A
//! [`ProbabilityMatrix`] is a point of the probability simplex over an
//! `I x J` grid: entries are nonnegative and sum to one.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on `|sum - 1|` accepted by [`validate_probability`].
pub const DEFAULT_SUM_TOL: f64 = 1e-8;
/// Default relative tolerance used by [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Entries in `[-NEGATIVE_CLAMP, 0)` are treated as floating-point noise.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape {
                rows,
                cols,
                reason: "rows and columns must be positive".into(),
            });
        }
        Ok(Self { rows, cols })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transpose(&self) -> Shape {
        Shape {
            rows: self.cols,
            cols: self.rows,
        }
    }

    /// Chart operations need at least two rows and two columns.
    pub fn require_chartable(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::ShapeTooSmall {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} grid needs {} entries, got {len}",
                self.rows,
                self.cols,
                self.len()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Nonnegative `I x J` matrix with entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    shape: Shape,
    entries: Vec<f64>,
}

/// Checks and normalizes a raw row-major grid into a [`ProbabilityMatrix`].
///
/// Entries in `[-1e-12, 0)` are clamped to zero, anything more negative is
/// rejected. The sum must be within `sum_tol` of one; the stored matrix is
/// divided by its sum.
pub fn validate_probability(shape: Shape, raw: &[f64], sum_tol: f64) -> Result<ProbabilityMatrix> {
    shape.check_len(raw.len())?;
    let mut entries = Vec::with_capacity(raw.len());
    for (idx, &v) in raw.iter().enumerate() {
        let (row, col) = (idx / shape.cols, idx % shape.cols);
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry { row, col });
        }
        if v < -NEGATIVE_CLAMP {
            return Err(Error::NegativeEntry { row, col, value: v });
        }
        entries.push(v.max(0.0));
    }
    let sum: f64 = entries.iter().sum();
    if sum.is_nan() || (sum - 1.0).abs() > sum_tol {
        return Err(Error::SumOutOfTolerance { sum, tol: sum_tol });
    }
    if sum != 1.0 {
        entries.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(ProbabilityMatrix { shape, entries })
}

impl ProbabilityMatrix {
    /// Row-major construction with the default sum tolerance.
    pub fn new(shape: Shape, raw: &[f64]) -> Result<Self> {
        validate_probability(shape, raw, DEFAULT_SUM_TOL)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let (shape, flat) = flatten_rows(rows)?;
        Self::new(shape, &flat)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape.rows
    }

    pub fn cols(&self) -> usize {
        self.shape.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.shape.cols + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.shape.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries
            .chunks(self.shape.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.shape.cols];
        for row in self.entries.chunks(self.shape.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> ProbabilityMatrix {
        let Shape { rows, cols } = self.shape;
        let mut entries = vec![0.0; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                entries[j * rows + i] = self.get(i, j);
            }
        }
        ProbabilityMatrix {
            shape: self.shape.transpose(),
            entries,
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.shape.cols)
            .map(|r| r.to_vec())
            .collect()
    }

    /// Largest absolute entrywise difference; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &ProbabilityMatrix) -> f64 {
        if self.shape != other.shape {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.shape.rows, self.shape.cols, &self.entries)
    }
}

impl Serialize for ProbabilityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProbabilityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        ProbabilityMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Two-way table of nonnegative integer counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    shape: Shape,
    counts: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(shape: Shape, counts: Vec<u64>) -> Result<Self> {
        shape.check_len(counts.len())?;
        let total = counts.iter().sum();
        Ok(Self {
            shape,
            counts,
            total,
        })
    }

    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            counts: vec![0; shape.len()],
            total: 0,
        }
    }

    pub fn from_rows<R: AsRef<[u64]>>(rows: &[R]) -> Result<Self> {
        let (shape, flat) = flatten_rows(rows)?;
        Self::new(shape, flat)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.shape.cols + col]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub(crate) fn increment(&mut self, row: usize, col: usize) {
        self.counts[row * self.shape.cols + col] += 1;
        self.total += 1;
    }

    pub fn row_margins(&self) -> Vec<u64> {
        self.counts
            .chunks(self.shape.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_margins(&self) -> Vec<u64> {
        let mut sums = vec![0; self.shape.cols];
        for row in self.counts.chunks(self.shape.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.shape.cols)
            .map(|r| r.to_vec())
            .collect()
    }
}

/// Empirical distribution `n_ij / n` of a table.
pub fn normalize(table: &ContingencyTable) -> Result<ProbabilityMatrix> {
    if table.total == 0 {
        return Err(Error::EmptyTable);
    }
    let n = table.total as f64;
    let raw: Vec<f64> = table.counts.iter().map(|&c| c as f64 / n).collect();
    ProbabilityMatrix::new(table.shape, &raw)
}

/// Number of singular values above `rank_tol * sigma_1 * max(I, J)`.
pub fn numerical_rank(p: &ProbabilityMatrix, rank_tol: f64) -> usize {
    dense_rank(&p.to_dmatrix(), rank_tol)
}

/// Same rank rule as [`numerical_rank`] for an arbitrary dense matrix.
pub fn dense_rank(m: &DMatrix<f64>, rank_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    let cutoff = rank_tol * top * m.nrows().max(m.ncols()) as f64;
    sv.iter().filter(|&&s| s > cutoff).count()
}

fn flatten_rows<T: Copy, R: AsRef<[T]>>(rows: &[R]) -> Result<(Shape, Vec<T>)> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.as_ref().len());
    let shape = Shape::new(nrows, ncols)?;
    let mut flat = Vec::with_capacity(shape.len());
    for (i, r) in rows.iter().enumerate() {
        let r = r.as_ref();
        if r.len() != ncols {
            return Err(Error::InvalidShape {
                rows: nrows,
                cols: ncols,
                reason: format!("row {i} has {} entries", r.len()),
            });
        }
        flat.extend_from_slice(r);
    }
    Ok((shape, flat))
}

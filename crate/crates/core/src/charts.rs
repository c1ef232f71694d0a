//! Non-redundant charts of the rank-two probability model.
//!
//! Chart `(j1, j2)` maps `D = 2I + 2J - 5` parameters onto the matrices
//!
//! ```text
//! P = alpha * a~ u^T + (1 - alpha) * c~ v^T
//! ```
//!
//! where `a~ = (a_1, .., a_{I-1}, 1 - sum a)`, likewise `c~`, the row vector
//! `u` carries `1 - sum b` in column `j1`, `0` in column `j2` and `b_j`
//! elsewhere, and `v` mirrors it with `0` in `j1` and `1 - sum d` in `j2`.
//! The parameter domain is the product of four "simplex with slack" blocks
//! and `alpha` in `[0, 1]`.
//!
//! Column indices are zero-based in the API and one-based in text output.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{column_combination, ColumnCombination};
use crate::matrix::{numerical_rank, ProbabilityMatrix, Shape};

/// Slack allowed on the closed domain inequalities.
pub const DOMAIN_SLACK: f64 = 1e-14;
/// Default tolerance for [`classify`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;
/// Default step for [`jacobian`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;
/// Allowed disagreement between the two expressions of `alpha` in
/// [`chart_inverse`].
pub const ALPHA_CONSISTENCY_TOL: f64 = 1e-8;

/// A pair of distinct columns `j1 < j2` (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChartId {
    pub j1: usize,
    pub j2: usize,
}

impl ChartId {
    pub fn new(j1: usize, j2: usize) -> Result<Self> {
        if j1 >= j2 {
            return Err(Error::InvalidChart(format!(
                "need j1 < j2, got columns {} and {}",
                j1 + 1,
                j2 + 1
            )));
        }
        Ok(Self { j1, j2 })
    }

    /// Builds from one-based column numbers as written on the command line.
    pub fn from_one_based(j1: usize, j2: usize) -> Result<Self> {
        if j1 == 0 || j2 == 0 {
            return Err(Error::InvalidChart("column numbers start at 1".into()));
        }
        Self::new(j1 - 1, j2 - 1)
    }

    pub fn check_cols(&self, cols: usize) -> Result<()> {
        if self.j2 >= cols {
            return Err(Error::InvalidChart(format!(
                "chart {self} needs at least {} columns, matrix has {cols}",
                self.j2 + 1
            )));
        }
        Ok(())
    }

    /// Columns outside the pair, ascending.
    pub fn other_columns(&self, cols: usize) -> impl Iterator<Item = usize> + '_ {
        (0..cols).filter(move |&j| j != self.j1 && j != self.j2)
    }

    /// Every chart of a `cols`-column shape in lexicographic order.
    pub fn all(cols: usize) -> Vec<ChartId> {
        (0..cols)
            .flat_map(|j1| (j1 + 1..cols).map(move |j2| ChartId { j1, j2 }))
            .collect()
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.j1 + 1, self.j2 + 1)
    }
}

impl FromStr for ChartId {
    type Err = Error;

    /// Parses one-based `"j1,j2"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::InvalidChart(format!("expected 'j1,j2', got '{s}'")));
        }
        let parse = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| Error::InvalidChart(format!("bad column number '{p}'")))
        };
        Self::from_one_based(parse(parts[0])?, parse(parts[1])?)
    }
}

#[derive(Serialize, Deserialize)]
struct RawChartId {
    j1: usize,
    j2: usize,
}

impl Serialize for ChartId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawChartId {
            j1: self.j1 + 1,
            j2: self.j2 + 1,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChartId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawChartId::deserialize(d)?;
        ChartId::from_one_based(raw.j1, raw.j2).map_err(serde::de::Error::custom)
    }
}

/// `D = 2I + 2J - 5`.
pub fn chart_dim(shape: Shape) -> Result<usize> {
    shape.require_chartable()?;
    Ok(2 * shape.rows + 2 * shape.cols - 5)
}

/// Parameters of one chart. `b` and `d` are indexed like
/// [`ChartId::other_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    chart: ChartId,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    alpha: f64,
}

impl ChartPoint {
    /// Checks dimensions only; domain membership is [`in_domain`].
    pub fn new(
        chart: ChartId,
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
        alpha: f64,
    ) -> Result<Self> {
        if a.is_empty() || a.len() != c.len() {
            return Err(Error::DimensionMismatch(format!(
                "a and c need equal positive length, got {} and {}",
                a.len(),
                c.len()
            )));
        }
        if b.len() != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "b and d need equal length, got {} and {}",
                b.len(),
                d.len()
            )));
        }
        chart.check_cols(b.len() + 2)?;
        let all_finite = [&a, &b, &c, &d]
            .iter()
            .flat_map(|v| v.iter())
            .chain(std::iter::once(&alpha))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::DimensionMismatch("non-finite coordinate".into()));
        }
        Ok(Self {
            chart,
            a,
            b,
            c,
            d,
            alpha,
        })
    }

    /// Splits a flat `(a, b, c, d, alpha)` vector of length `D`.
    pub fn from_coords(chart: ChartId, shape: Shape, coords: &[f64]) -> Result<Self> {
        let dim = chart_dim(shape)?;
        if coords.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "chart on {shape} needs {dim} coordinates, got {}",
                coords.len()
            )));
        }
        let (ra, rb) = (shape.rows - 1, shape.cols - 2);
        let (a, rest) = coords.split_at(ra);
        let (b, rest) = rest.split_at(rb);
        let (c, rest) = rest.split_at(ra);
        let (d, rest) = rest.split_at(rb);
        Self::new(
            chart,
            a.to_vec(),
            b.to_vec(),
            c.to_vec(),
            d.to_vec(),
            rest[0],
        )
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v.extend_from_slice(&self.c);
        v.extend_from_slice(&self.d);
        v.push(self.alpha);
        v
    }

    pub fn chart(&self) -> ChartId {
        self.chart
    }

    pub fn shape(&self) -> Shape {
        Shape {
            rows: self.a.len() + 1,
            cols: self.b.len() + 2,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.a.len() + 2 * self.b.len() + 1
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest coordinate difference; infinite for different charts or shapes.
    pub fn max_abs_diff(&self, other: &ChartPoint) -> f64 {
        if self.chart != other.chart || self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct IndexedValue {
    col: usize,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct RawChartPoint {
    j1: usize,
    j2: usize,
    a: Vec<f64>,
    b: Vec<IndexedValue>,
    c: Vec<f64>,
    d: Vec<IndexedValue>,
    alpha: f64,
}

impl Serialize for ChartPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let cols = self.shape().cols;
        let indexed = |vals: &[f64]| -> Vec<IndexedValue> {
            self.chart
                .other_columns(cols)
                .zip(vals)
                .map(|(j, &value)| IndexedValue { col: j + 1, value })
                .collect()
        };
        RawChartPoint {
            j1: self.chart.j1 + 1,
            j2: self.chart.j2 + 1,
            a: self.a.clone(),
            b: indexed(&self.b),
            c: self.c.clone(),
            d: indexed(&self.d),
            alpha: self.alpha,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChartPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawChartPoint::deserialize(d)?;
        let chart = ChartId::from_one_based(raw.j1, raw.j2).map_err(D::Error::custom)?;
        let cols = raw.b.len() + 2;
        let expected: Vec<usize> = chart.other_columns(cols).map(|j| j + 1).collect();
        for (name, block) in [("b", &raw.b), ("d", &raw.d)] {
            let found: Vec<usize> = block.iter().map(|e| e.col).collect();
            if found != expected {
                return Err(D::Error::custom(format!(
                    "{name} must list columns {expected:?} in order, found {found:?}"
                )));
            }
        }
        ChartPoint::new(
            chart,
            raw.a,
            raw.b.iter().map(|e| e.value).collect(),
            raw.c,
            raw.d.iter().map(|e| e.value).collect(),
            raw.alpha,
        )
        .map_err(D::Error::custom)
    }
}

fn block_ok(v: &[f64]) -> bool {
    let sum: f64 = v.iter().sum();
    v.iter()
        .all(|&x| (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x))
        && (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&sum)
}

/// Membership in the closed parameter domain.
pub fn in_domain(point: &ChartPoint) -> bool {
    block_ok(&point.a)
        && block_ok(&point.b)
        && block_ok(&point.c)
        && block_ok(&point.d)
        && (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&point.alpha)
}

/// Evaluates the chart polynomial without domain checks or normalization.
/// `coords` is the flat `(a, b, c, d, alpha)` vector.
pub(crate) fn forward_raw(chart: ChartId, shape: Shape, coords: &[f64]) -> Vec<f64> {
    let (rows, cols) = (shape.rows, shape.cols);
    let (ra, rb) = (rows - 1, cols - 2);
    let a = &coords[..ra];
    let b = &coords[ra..ra + rb];
    let c = &coords[ra + rb..2 * ra + rb];
    let d = &coords[2 * ra + rb..2 * ra + 2 * rb];
    let alpha = coords[2 * ra + 2 * rb];

    let full = |v: &[f64]| -> Vec<f64> {
        let mut out = v.to_vec();
        out.push(1.0 - v.iter().sum::<f64>());
        out
    };
    let a_full = full(a);
    let c_full = full(c);
    let mut u = vec![0.0; cols];
    let mut w = vec![0.0; cols];
    u[chart.j1] = 1.0 - b.iter().sum::<f64>();
    w[chart.j2] = 1.0 - d.iter().sum::<f64>();
    for (k, j) in chart.other_columns(cols).enumerate() {
        u[j] = b[k];
        w[j] = d[k];
    }

    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        let (ai, ci) = (alpha * a_full[i], (1.0 - alpha) * c_full[i]);
        for j in 0..cols {
            out[i * cols + j] = ai * u[j] + ci * w[j];
        }
    }
    out
}

pub fn chart_forward(point: &ChartPoint) -> Result<ProbabilityMatrix> {
    if !in_domain(point) {
        return Err(Error::OutOfDomain);
    }
    let raw = forward_raw(point.chart, point.shape(), &point.coords());
    ProbabilityMatrix::new(point.shape(), &raw)
}

/// Which formula set [`chart_inverse`] applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseBranch {
    /// Both base columns nonzero.
    BothColumns,
    /// Column `j2` is zero; `alpha = 1`.
    SecondColumnZero,
    /// Column `j1` is zero; `alpha = 0`.
    FirstColumnZero,
}

fn not_in_image(chart: ChartId, reason: impl Into<String>) -> Error {
    Error::NotInChartImage {
        chart: chart.to_string(),
        reason: reason.into(),
    }
}

/// Coefficients of columns on a single nonzero base column `base`.
fn single_column_coeffs(
    p: &ProbabilityMatrix,
    chart: ChartId,
    base: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let x = p.column(base);
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let limit = tol * p.max_entry();
    chart
        .other_columns(p.cols())
        .map(|j| {
            let col = p.column(j);
            let t = x.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>() / xx;
            let res = col
                .iter()
                .zip(&x)
                .map(|(cv, xv)| (cv - t * xv).abs())
                .fold(0.0, f64::max);
            if res > limit || t < -tol {
                Err(not_in_image(
                    chart,
                    format!(
                        "column {} is not a nonnegative multiple of column {}",
                        j + 1,
                        base + 1
                    ),
                ))
            } else {
                Ok(t.max(0.0))
            }
        })
        .collect()
}

fn head(v: &[f64], sum: f64) -> Vec<f64> {
    v[..v.len() - 1].iter().map(|x| x / sum).collect()
}

/// Closed-form inverse of a chart, also reporting the branch used.
pub fn chart_inverse_with_branch(
    chart: ChartId,
    p: &ProbabilityMatrix,
    tol: f64,
) -> Result<(ChartPoint, InverseBranch)> {
    let shape = p.shape();
    shape.require_chartable()?;
    chart.check_cols(shape.cols)?;
    let x = p.column(chart.j1);
    let y = p.column(chart.j2);
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let zero = tol * p.max_entry();
    let zeros = |n: usize| vec![0.0; n];
    let (ra, rb) = (shape.rows - 1, shape.cols - 2);

    let (point, branch) = if sx > zero && sy > zero {
        let comb: ColumnCombination = match column_combination(p, chart.j1, chart.j2, tol) {
            Ok(c) => c,
            Err(Error::NotRepresentable { col }) => {
                return Err(not_in_image(
                    chart,
                    format!(
                        "column {} needs a negative or off-span combination",
                        col + 1
                    ),
                ))
            }
            Err(e) => return Err(e),
        };
        let (st, ss) = (comb.sum_t(), comb.sum_s());
        let alpha = (st + 1.0) * sx;
        let other = 1.0 - (ss + 1.0) * sy;
        if (alpha - other).abs() > ALPHA_CONSISTENCY_TOL {
            return Err(Error::AlphaInconsistent {
                left: alpha,
                right: other,
            });
        }
        let b = comb
            .coeffs
            .iter()
            .map(|&(_, t, _)| t / (1.0 + st))
            .collect();
        let d = comb
            .coeffs
            .iter()
            .map(|&(_, _, s)| s / (1.0 + ss))
            .collect();
        let pt = ChartPoint::new(
            chart,
            head(&x, sx),
            b,
            head(&y, sy),
            d,
            alpha.clamp(0.0, 1.0),
        )?;
        (pt, InverseBranch::BothColumns)
    } else if sx > zero {
        let t = single_column_coeffs(p, chart, chart.j1, tol)?;
        let st: f64 = t.iter().sum();
        let alpha = (st + 1.0) * sx;
        if (alpha - 1.0).abs() > ALPHA_CONSISTENCY_TOL {
            return Err(Error::AlphaInconsistent {
                left: alpha,
                right: 1.0,
            });
        }
        let b = t.iter().map(|t| t / (1.0 + st)).collect();
        let pt = ChartPoint::new(chart, head(&x, sx), b, zeros(ra), zeros(rb), 1.0)?;
        (pt, InverseBranch::SecondColumnZero)
    } else if sy > zero {
        let s = single_column_coeffs(p, chart, chart.j2, tol)?;
        let ss: f64 = s.iter().sum();
        let alpha = 1.0 - (ss + 1.0) * sy;
        if alpha.abs() > ALPHA_CONSISTENCY_TOL {
            return Err(Error::AlphaInconsistent {
                left: alpha,
                right: 0.0,
            });
        }
        let d = s.iter().map(|s| s / (1.0 + ss)).collect();
        let pt = ChartPoint::new(chart, zeros(ra), zeros(rb), head(&y, sy), d, 0.0)?;
        (pt, InverseBranch::FirstColumnZero)
    } else {
        return Err(not_in_image(chart, "both base columns are zero"));
    };
    debug_assert!(in_domain(&point));
    Ok((point, branch))
}

/// Closed-form inverse of `chart` at `P`.
pub fn chart_inverse(chart: ChartId, p: &ProbabilityMatrix, tol: f64) -> Result<ChartPoint> {
    chart_inverse_with_branch(chart, p, tol).map(|(pt, _)| pt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartSelection {
    pub chart: ChartId,
    pub branch: InverseBranch,
}

/// Every chart whose inverse formulas apply at `P`, in lexicographic order.
pub fn select_charts(p: &ProbabilityMatrix, tol: f64) -> Result<Vec<ChartSelection>> {
    p.shape().require_chartable()?;
    let rank = numerical_rank(p, tol);
    if rank > 2 {
        return Err(Error::RankTooHigh { rank });
    }
    Ok(ChartId::all(p.cols())
        .into_iter()
        .filter_map(|chart| {
            chart_inverse_with_branch(chart, p, tol)
                .ok()
                .map(|(_, branch)| ChartSelection { chart, branch })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointFlag {
    /// The image matrix has a zero entry.
    BoundaryOfM,
    /// The image matrix has rank one.
    RankOne,
    /// The image matrix has two proportional columns.
    ProportionalColumns,
    Interior,
}

pub type Flags = BTreeSet<PointFlag>;

/// Tags a domain point by the kind of matrix it maps to.
///
/// A vanishing `a_i` or `c_i` puts the image on the boundary of the model,
/// `alpha` at 0 or 1 makes it rank one, and a vanishing `b_j` or `d_j`
/// produces proportional columns. Any block sum reaching one raises both
/// `BoundaryOfM` and `ProportionalColumns`.
pub fn classify(point: &ChartPoint, tol: f64) -> Result<Flags> {
    if !in_domain(point) {
        return Err(Error::OutOfDomain);
    }
    let mut flags = Flags::new();
    let low = |v: &[f64]| v.iter().any(|&x| x <= tol);
    let full = |v: &[f64]| v.iter().sum::<f64>() >= 1.0 - tol;

    if low(&point.a) || low(&point.c) {
        flags.insert(PointFlag::BoundaryOfM);
    }
    if point.alpha <= tol || point.alpha >= 1.0 - tol {
        flags.insert(PointFlag::RankOne);
    }
    if low(&point.b) || low(&point.d) {
        flags.insert(PointFlag::ProportionalColumns);
    }
    if full(&point.a) || full(&point.b) || full(&point.c) || full(&point.d) {
        flags.insert(PointFlag::BoundaryOfM);
        flags.insert(PointFlag::ProportionalColumns);
    }
    if flags.is_empty() {
        flags.insert(PointFlag::Interior);
    }
    Ok(flags)
}

pub fn is_interior(flags: &Flags) -> bool {
    flags.len() == 1 && flags.contains(&PointFlag::Interior)
}

/// Central-difference Jacobian of the chart at an interior point, shape
/// `(I*J) x D` with rows in row-major matrix order.
pub fn jacobian(point: &ChartPoint, step: f64) -> Result<DMatrix<f64>> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidSettings(format!(
            "step must be positive, got {step}"
        )));
    }
    if !is_interior(&classify(point, DEFAULT_CLASSIFY_TOL)?) {
        return Err(Error::NotInterior);
    }
    let shape = point.shape();
    let base = point.coords();
    let mut jac = DMatrix::zeros(shape.len(), base.len());
    let mut probe = base.clone();
    for k in 0..base.len() {
        probe[k] = base[k] + step;
        let plus = forward_raw(point.chart, shape, &probe);
        probe[k] = base[k] - step;
        let minus = forward_raw(point.chart, shape, &probe);
        probe[k] = base[k];
        for (r, (p, m)) in plus.iter().zip(&minus).enumerate() {
            jac[(r, k)] = (p - m) / (2.0 * step);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{dense_rank, DEFAULT_RANK_TOL};

    const TOL: f64 = 1e-9;

    fn id(j1: usize, j2: usize) -> ChartId {
        ChartId::new(j1, j2).unwrap()
    }

    #[test]
    fn dims() {
        assert_eq!(chart_dim(Shape::new(2, 2).unwrap()).unwrap(), 3);
        assert_eq!(chart_dim(Shape::new(2, 3).unwrap()).unwrap(), 5);
        assert_eq!(chart_dim(Shape::new(3, 3).unwrap()).unwrap(), 7);
        assert!(matches!(
            chart_dim(Shape::new(1, 4).unwrap()),
            Err(Error::ShapeTooSmall { .. })
        ));
    }

    #[test]
    fn chart_id_parsing() {
        let c: ChartId = "1,3".parse().unwrap();
        assert_eq!(c, id(0, 2));
        assert_eq!(c.to_string(), "1,3");
        assert!("2,1".parse::<ChartId>().is_err());
        assert!("0,1".parse::<ChartId>().is_err());
        assert!("1".parse::<ChartId>().is_err());
        assert_eq!(ChartId::all(3), vec![id(0, 1), id(0, 2), id(1, 2)]);
    }

    #[test]
    fn domain_membership() {
        let p = ChartPoint::new(
            id(0, 1),
            vec![0.1, 0.1],
            vec![0.1],
            vec![0.1, 0.1],
            vec![0.1],
            0.1,
        )
        .unwrap();
        assert!(in_domain(&p));
        let p = ChartPoint::new(
            id(0, 1),
            vec![0.7, 0.7],
            vec![0.1],
            vec![0.1, 0.1],
            vec![0.1],
            0.1,
        )
        .unwrap();
        assert!(!in_domain(&p));
        let p = ChartPoint::new(
            id(0, 1),
            vec![0.1, 0.1],
            vec![0.1],
            vec![0.1, 0.1],
            vec![0.1],
            1.0,
        )
        .unwrap();
        assert!(in_domain(&p));
        let p = ChartPoint::new(id(0, 1), vec![0.1], vec![], vec![0.1], vec![], -0.01).unwrap();
        assert!(!in_domain(&p));
        assert_eq!(chart_forward(&p), Err(Error::OutOfDomain));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            ChartPoint::new(id(0, 1), vec![0.1, 0.1], vec![], vec![0.1], vec![], 0.5),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            ChartPoint::new(id(0, 2), vec![0.1], vec![], vec![0.1], vec![], 0.5),
            Err(Error::InvalidChart(_))
        ));
        assert!(ChartPoint::from_coords(id(0, 1), Shape::new(2, 2).unwrap(), &[0.1; 4]).is_err());
    }

    #[test]
    fn forward_examples() {
        let pt = ChartPoint::new(id(0, 1), vec![1.0], vec![], vec![0.0], vec![], 0.5).unwrap();
        assert_eq!(chart_forward(&pt).unwrap().entries(), &[0.5, 0.0, 0.0, 0.5]);

        let pt =
            ChartPoint::new(id(0, 1), vec![0.5], vec![0.5], vec![0.5], vec![0.5], 0.5).unwrap();
        let p = chart_forward(&pt).unwrap();
        let want = [0.125, 0.125, 0.25, 0.125, 0.125, 0.25];
        for (g, w) in p.entries().iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn placement_for_general_chart() {
        // chart (2,3) on 2x3: u = (b_1, 1 - b_1, 0), v = (d_1, 0, 1 - d_1)
        let pt =
            ChartPoint::new(id(1, 2), vec![1.0], vec![0.25], vec![0.0], vec![0.5], 0.5).unwrap();
        let p = chart_forward(&pt).unwrap();
        let want = [0.125, 0.375, 0.0, 0.25, 0.0, 0.25];
        for (g, w) in p.entries().iter().zip(want) {
            assert!((g - w).abs() < 1e-15, "{:?}", p.entries());
        }
    }

    #[test]
    fn inverse_diag() {
        let p = ProbabilityMatrix::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let (pt, branch) = chart_inverse_with_branch(id(0, 1), &p, TOL).unwrap();
        assert_eq!(branch, InverseBranch::BothColumns);
        assert_eq!(pt.a(), &[1.0]);
        assert_eq!(pt.c(), &[0.0]);
        assert_eq!(pt.alpha(), 0.5);
    }

    #[test]
    fn inverse_zero_columns() {
        let p = ProbabilityMatrix::from_rows(&[[0.5, 0.0, 0.5], [0.0, 0.0, 0.0]]).unwrap();
        let (pt, branch) = chart_inverse_with_branch(id(0, 1), &p, TOL).unwrap();
        assert_eq!(branch, InverseBranch::SecondColumnZero);
        assert_eq!(pt.alpha(), 1.0);
        assert_eq!(pt.c(), &[0.0]);
        assert_eq!(pt.d(), &[0.0]);
        assert!(chart_forward(&pt).unwrap().max_abs_diff(&p) <= 1e-15);

        let p = ProbabilityMatrix::from_rows(&[[0.0, 0.3, 0.1], [0.0, 0.45, 0.15]]).unwrap();
        let (pt, branch) = chart_inverse_with_branch(id(0, 1), &p, TOL).unwrap();
        assert_eq!(branch, InverseBranch::FirstColumnZero);
        assert_eq!(pt.alpha(), 0.0);
        assert!(chart_forward(&pt).unwrap().max_abs_diff(&p) <= 1e-15);

        let p = ProbabilityMatrix::from_rows(&[[0.0, 0.0, 0.5], [0.0, 0.0, 0.5]]).unwrap();
        assert!(matches!(
            chart_inverse(id(0, 1), &p, TOL),
            Err(Error::NotInChartImage { .. })
        ));
    }

    #[test]
    fn inverse_zero_column_with_unrelated_other_column() {
        let p = ProbabilityMatrix::from_rows(&[[0.5, 0.0, 0.0], [0.0, 0.0, 0.5]]).unwrap();
        assert!(matches!(
            chart_inverse(id(0, 1), &p, TOL),
            Err(Error::NotInChartImage { .. })
        ));
    }

    #[test]
    fn inverse_rank_one_dependent_columns() {
        let p = ProbabilityMatrix::from_rows(&[[0.25, 0.25], [0.25, 0.25]]).unwrap();
        assert_eq!(
            chart_inverse(id(0, 1), &p, TOL),
            Err(Error::DependentBaseColumns { j1: 0, j2: 1 })
        );
        assert!(select_charts(&p, TOL).unwrap().is_empty());
    }

    #[test]
    fn selection_examples() {
        let p = ProbabilityMatrix::from_rows(&[[0.2, 0.2, 0.0], [0.0, 0.2, 0.4]]).unwrap();
        let sel = select_charts(&p, TOL).unwrap();
        assert_eq!(
            sel,
            vec![ChartSelection {
                chart: id(0, 2),
                branch: InverseBranch::BothColumns
            }]
        );
        assert!(matches!(
            chart_inverse(id(0, 1), &p, TOL),
            Err(Error::NotInChartImage { .. })
        ));

        let diag = ProbabilityMatrix::from_rows(&[[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let sel = select_charts(&diag, TOL).unwrap();
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].chart, id(0, 1));

        let eye = ProbabilityMatrix::from_rows(&[
            [1.0 / 3.0, 0.0, 0.0],
            [0.0, 1.0 / 3.0, 0.0],
            [0.0, 0.0, 1.0 / 3.0],
        ])
        .unwrap();
        assert_eq!(
            select_charts(&eye, TOL),
            Err(Error::RankTooHigh { rank: 3 })
        );
    }

    #[test]
    fn classification_examples() {
        let base = || {
            ChartPoint::new(
                id(0, 1),
                vec![0.1, 0.1],
                vec![0.1],
                vec![0.1, 0.1],
                vec![0.1],
                0.1,
            )
            .unwrap()
        };
        assert_eq!(
            classify(&base(), TOL).unwrap(),
            Flags::from([PointFlag::Interior])
        );

        let mut p = base();
        p.alpha = 0.0;
        assert!(classify(&p, TOL).unwrap().contains(&PointFlag::RankOne));
        p.alpha = 1.0;
        assert!(classify(&p, TOL).unwrap().contains(&PointFlag::RankOne));

        let mut p = base();
        p.b[0] = 0.0;
        assert!(classify(&p, TOL)
            .unwrap()
            .contains(&PointFlag::ProportionalColumns));

        let mut p = base();
        p.a[0] = 0.0;
        assert!(classify(&p, TOL).unwrap().contains(&PointFlag::BoundaryOfM));

        let mut p = base();
        p.a = vec![0.6, 0.4];
        let flags = classify(&p, TOL).unwrap();
        assert!(flags.contains(&PointFlag::BoundaryOfM));
        assert!(flags.contains(&PointFlag::ProportionalColumns));

        let mut p = base();
        p.alpha = 2.0;
        assert_eq!(classify(&p, TOL), Err(Error::OutOfDomain));
    }

    #[test]
    fn classified_boundary_images_have_expected_structure() {
        // a_1 = 0 puts a zero in the image
        let pt = ChartPoint::new(
            id(0, 1),
            vec![0.0, 0.5],
            vec![0.3],
            vec![0.0, 0.2],
            vec![0.4],
            0.6,
        )
        .unwrap();
        let p = chart_forward(&pt).unwrap();
        assert!(p.entries().contains(&0.0));
        // alpha = 1 gives a rank-one image
        let pt = ChartPoint::new(
            id(0, 1),
            vec![0.2, 0.5],
            vec![0.3],
            vec![0.1, 0.2],
            vec![0.4],
            1.0,
        )
        .unwrap();
        assert_eq!(
            numerical_rank(&chart_forward(&pt).unwrap(), DEFAULT_RANK_TOL),
            1
        );
        // b_3 = 0 makes column 3 proportional to column 2
        let pt = ChartPoint::new(
            id(0, 1),
            vec![0.2, 0.5],
            vec![0.0],
            vec![0.1, 0.2],
            vec![0.4],
            0.5,
        )
        .unwrap();
        let p = chart_forward(&pt).unwrap();
        let (c2, c3) = (p.column(1), p.column(2));
        let ratio = c3[0] / c2[0];
        assert!(c2
            .iter()
            .zip(&c3)
            .all(|(x, y)| (y - ratio * x).abs() < 1e-15));
    }

    #[test]
    fn jacobian_rank_small() {
        let pt = ChartPoint::new(id(0, 1), vec![0.3], vec![], vec![0.6], vec![], 0.4).unwrap();
        let jac = jacobian(&pt, DEFAULT_FD_STEP).unwrap();
        assert_eq!(jac.shape(), (4, 3));
        assert_eq!(dense_rank(&jac, 1e-6), 3);

        let pt = ChartPoint::new(id(0, 1), vec![0.3], vec![], vec![0.6], vec![], 0.0).unwrap();
        assert_eq!(jacobian(&pt, DEFAULT_FD_STEP), Err(Error::NotInterior));
    }

    #[test]
    fn json_layout() {
        let pt =
            ChartPoint::new(id(0, 2), vec![0.5], vec![0.25], vec![0.5], vec![0.125], 0.5).unwrap();
        let v = serde_json::to_value(&pt).unwrap();
        assert_eq!(v["j1"], 1);
        assert_eq!(v["j2"], 3);
        assert_eq!(v["b"][0]["col"], 2);
        assert_eq!(v["d"][0]["value"], 0.125);
        let back: ChartPoint = serde_json::from_value(v).unwrap();
        assert_eq!(back, pt);

        let wrong = r#"{"j1":1,"j2":3,"a":[0.5],"b":[{"col":3,"value":0.2}],"c":[0.5],"d":[{"col":2,"value":0.1}],"alpha":0.5}"#;
        assert!(serde_json::from_str::<ChartPoint>(wrong).is_err());
    }
}

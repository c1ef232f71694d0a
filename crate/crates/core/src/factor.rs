//! Mixtures of independence models and exact nonnegative rank-two
//! factorization.
//!
//! A rank-two nonnegative matrix always has two columns such that every
//! other column is a nonnegative combination of them: express all columns
//! in some independent basis, then take the two extremal rays of the planar
//! cone spanned by the coefficient pairs. [`extremal_pair`] finds those
//! columns and [`factorize_rank2`] turns them into a two-component mixture.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::charts::ChartId;
use crate::error::{Error, Result};
use crate::matrix::{numerical_rank, ProbabilityMatrix, Shape, NEGATIVE_CLAMP};

/// Default tolerance for column independence and representability tests.
pub const DEFAULT_COMBINATION_TOL: f64 = 1e-9;
const MIXTURE_SUM_TOL: f64 = 1e-8;

/// `P = sum_h weights[h] * col_factors[h] * row_factors[h]^T`.
///
/// Every weight vector and factor is a probability vector; the constructor
/// clamps floating-point noise and renormalizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixture", into = "RawMixture")]
pub struct MixtureRepresentation {
    weights: Vec<f64>,
    col_factors: Vec<Vec<f64>>,
    row_factors: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawMixture {
    k: usize,
    weights: Vec<f64>,
    col_factors: Vec<Vec<f64>>,
    row_factors: Vec<Vec<f64>>,
}

impl TryFrom<RawMixture> for MixtureRepresentation {
    type Error = Error;

    fn try_from(raw: RawMixture) -> Result<Self> {
        if raw.k != raw.weights.len() {
            return Err(Error::InvalidMixture(format!(
                "k = {} but {} weights given",
                raw.k,
                raw.weights.len()
            )));
        }
        MixtureRepresentation::new(raw.weights, raw.col_factors, raw.row_factors)
    }
}

impl From<MixtureRepresentation> for RawMixture {
    fn from(m: MixtureRepresentation) -> Self {
        RawMixture {
            k: m.weights.len(),
            weights: m.weights,
            col_factors: m.col_factors,
            row_factors: m.row_factors,
        }
    }
}

fn simplex_normalize(v: &mut [f64], what: &str) -> Result<()> {
    for x in v.iter_mut() {
        if !x.is_finite() || *x < -NEGATIVE_CLAMP {
            return Err(Error::InvalidMixture(format!("{what} has entry {x}")));
        }
        *x = x.max(0.0);
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > MIXTURE_SUM_TOL {
        return Err(Error::InvalidMixture(format!("{what} sums to {sum}")));
    }
    v.iter_mut().for_each(|x| *x /= sum);
    Ok(())
}

impl MixtureRepresentation {
    pub fn new(
        mut weights: Vec<f64>,
        mut col_factors: Vec<Vec<f64>>,
        mut row_factors: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::InvalidMixture("no components".into()));
        }
        if col_factors.len() != k || row_factors.len() != k {
            return Err(Error::InvalidMixture(format!(
                "{k} weights but {} column and {} row factors",
                col_factors.len(),
                row_factors.len()
            )));
        }
        let rows = col_factors[0].len();
        let cols = row_factors[0].len();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMixture("empty factor".into()));
        }
        if col_factors.iter().any(|c| c.len() != rows)
            || row_factors.iter().any(|r| r.len() != cols)
        {
            return Err(Error::InvalidMixture("factor lengths differ".into()));
        }
        simplex_normalize(&mut weights, "weights")?;
        for (h, c) in col_factors.iter_mut().enumerate() {
            simplex_normalize(c, &format!("col_factors[{h}]"))?;
        }
        for (h, r) in row_factors.iter_mut().enumerate() {
            simplex_normalize(r, &format!("row_factors[{h}]"))?;
        }
        Ok(Self {
            weights,
            col_factors,
            row_factors,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Length-`I` factors, one per component.
    pub fn col_factors(&self) -> &[Vec<f64>] {
        &self.col_factors
    }

    /// Length-`J` factors, one per component.
    pub fn row_factors(&self) -> &[Vec<f64>] {
        &self.row_factors
    }

    pub fn shape(&self) -> Shape {
        Shape {
            rows: self.col_factors[0].len(),
            cols: self.row_factors[0].len(),
        }
    }
}

pub fn mixture_to_matrix(rep: &MixtureRepresentation) -> ProbabilityMatrix {
    let shape = rep.shape();
    let mut raw = vec![0.0; shape.len()];
    for h in 0..rep.k() {
        let w = rep.weights[h];
        let c = &rep.col_factors[h];
        let r = &rep.row_factors[h];
        for i in 0..shape.rows {
            let wc = w * c[i];
            for j in 0..shape.cols {
                raw[i * shape.cols + j] += wc * r[j];
            }
        }
    }
    ProbabilityMatrix::new(shape, &raw).expect("convex combination of simplex products")
}

/// Columns of `P` written as `C_j = t_j * x + s_j * y` over a base pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnCombination {
    pub base: ChartId,
    /// Column `j1` of `P`.
    pub x: Vec<f64>,
    /// Column `j2` of `P`.
    pub y: Vec<f64>,
    /// `(j, t_j, s_j)` for every column outside the base pair, ascending `j`.
    pub coeffs: Vec<(usize, f64, f64)>,
}

impl ColumnCombination {
    pub fn sum_t(&self) -> f64 {
        self.coeffs.iter().map(|c| c.1).sum()
    }

    pub fn sum_s(&self) -> f64 {
        self.coeffs.iter().map(|c| c.2).sum()
    }
}

/// Orthonormal basis of span{x, y} by modified Gram-Schmidt, used to solve
/// the two-unknown least-squares problems stably.
struct PairBasis {
    q1: Vec<f64>,
    q2: Vec<f64>,
    x_norm: f64,
    y_on_q1: f64,
    y_perp_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

impl PairBasis {
    /// `None` when sin^2 of the angle between x and y is at most `tol^2`.
    fn new(x: &[f64], y: &[f64], tol: f64) -> Option<Self> {
        let xx = dot(x, x);
        let yy = dot(y, y);
        if xx == 0.0 || yy == 0.0 {
            return None;
        }
        let xy = dot(x, y);
        let sin2 = ((xx * yy - xy * xy) / (xx * yy)).max(0.0);
        if sin2 <= tol * tol {
            return None;
        }
        let x_norm = xx.sqrt();
        let q1: Vec<f64> = x.iter().map(|v| v / x_norm).collect();
        let mut perp = y.to_vec();
        let mut y_on_q1 = 0.0;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            let proj = dot(&q1, &perp);
            y_on_q1 += proj;
            perp.iter_mut().zip(&q1).for_each(|(p, q)| *p -= proj * q);
        }
        let y_perp_norm = dot(&perp, &perp).sqrt();
        if y_perp_norm == 0.0 {
            return None;
        }
        let q2 = perp.iter().map(|v| v / y_perp_norm).collect();
        Some(Self {
            q1,
            q2,
            x_norm,
            y_on_q1,
            y_perp_norm,
        })
    }

    /// Least-squares `(t, s)` for `c ~ t x + s y`.
    fn solve(&self, c: &[f64]) -> (f64, f64) {
        let mut r = c.to_vec();
        let (mut u, mut v) = (0.0, 0.0);
        for _ in 0..2 {
            let du = dot(&self.q1, &r);
            r.iter_mut().zip(&self.q1).for_each(|(ri, q)| *ri -= du * q);
            let dv = dot(&self.q2, &r);
            r.iter_mut().zip(&self.q2).for_each(|(ri, q)| *ri -= dv * q);
            u += du;
            v += dv;
        }
        let s = v / self.y_perp_norm;
        let t = (u - s * self.y_on_q1) / self.x_norm;
        (t, s)
    }
}

fn residual(c: &[f64], x: &[f64], y: &[f64], t: f64, s: f64) -> f64 {
    c.iter()
        .zip(x.iter().zip(y))
        .map(|(ci, (xi, yi))| (ci - t * xi - s * yi).abs())
        .fold(0.0, f64::max)
}

/// Base columns `x`, `y` and the `(t, s)` of every column.
type SignedCoefficients = (Vec<f64>, Vec<f64>, Vec<(f64, f64)>);

/// Signed coefficients of every column in the basis of columns `j1, j2`;
/// fails when some column is off the span.
fn signed_coefficients(
    p: &ProbabilityMatrix,
    j1: usize,
    j2: usize,
    tol: f64,
) -> Result<SignedCoefficients> {
    let x = p.column(j1);
    let y = p.column(j2);
    let basis = PairBasis::new(&x, &y, tol).ok_or(Error::DependentBaseColumns { j1, j2 })?;
    let limit = tol * p.max_entry();
    let mut out = Vec::with_capacity(p.cols());
    for j in 0..p.cols() {
        let coeff = if j == j1 {
            (1.0, 0.0)
        } else if j == j2 {
            (0.0, 1.0)
        } else {
            let c = p.column(j);
            let (t, s) = basis.solve(&c);
            if residual(&c, &x, &y, t, s) > limit {
                return Err(Error::NotRepresentable { col: j });
            }
            (t, s)
        };
        out.push(coeff);
    }
    Ok((x, y, out))
}

/// Writes every other column as a nonnegative combination of columns `j1`
/// and `j2` (zero-based, `j1 < j2`).
///
/// Coefficients in `[-tol, 0)` are clamped to zero; more negative ones, or a
/// least-squares residual above `tol * max_entry`, give `NotRepresentable`.
pub fn column_combination(
    p: &ProbabilityMatrix,
    j1: usize,
    j2: usize,
    tol: f64,
) -> Result<ColumnCombination> {
    let base = ChartId::new(j1, j2)?;
    base.check_cols(p.cols())?;
    let (x, y, signed) = signed_coefficients(p, j1, j2, tol)?;
    let mut coeffs = Vec::with_capacity(p.cols() - 2);
    for (j, &(t, s)) in signed.iter().enumerate() {
        if j == j1 || j == j2 {
            continue;
        }
        if t < -tol || s < -tol {
            return Err(Error::NotRepresentable { col: j });
        }
        coeffs.push((j, t.max(0.0), s.max(0.0)));
    }
    Ok(ColumnCombination { base, x, y, coeffs })
}

fn first_independent_pair(p: &ProbabilityMatrix, tol: f64) -> Option<(usize, usize)> {
    let cols: Vec<Vec<f64>> = (0..p.cols()).map(|j| p.column(j)).collect();
    for j1 in 0..p.cols() {
        for j2 in j1 + 1..p.cols() {
            if PairBasis::new(&cols[j1], &cols[j2], tol).is_some() {
                return Some((j1, j2));
            }
        }
    }
    None
}

/// Finds the two columns spanning the planar cone of all column coefficient
/// pairs, and the nonnegative combination over them.
pub fn extremal_pair(p: &ProbabilityMatrix, tol: f64) -> Result<(ChartId, ColumnCombination)> {
    let (j1, j2) = first_independent_pair(p, tol).ok_or(Error::RankOne)?;
    let (_, _, signed) = match signed_coefficients(p, j1, j2, tol) {
        Ok(v) => v,
        Err(Error::NotRepresentable { .. }) => {
            return Err(Error::RankTooHigh {
                rank: numerical_rank(p, tol).max(3),
            })
        }
        Err(e) => return Err(e),
    };

    let zero_col = tol * p.max_entry();
    let mut rays: Vec<(f64, usize)> = (0..p.cols())
        .filter(|&j| p.column(j).iter().any(|&v| v > zero_col))
        .map(|j| {
            let (t, s) = signed[j];
            (s.atan2(t).rem_euclid(TAU), j)
        })
        .collect();
    rays.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // the cone is the complement of the widest angular gap between rays
    let n = rays.len();
    let (mut gap, mut gap_at) = (TAU - rays[n - 1].0 + rays[0].0, n - 1);
    for k in 0..n - 1 {
        let g = rays[k + 1].0 - rays[k].0;
        if g > gap {
            gap = g;
            gap_at = k;
        }
    }
    let spread = TAU - gap;
    if spread >= PI - 1e-12 {
        // antipodal rays force proportional base columns for a nonnegative P
        return if numerical_rank(p, tol) <= 1 {
            Err(Error::RankOne)
        } else {
            Err(Error::RankTooHigh {
                rank: numerical_rank(p, tol),
            })
        };
    }
    let first = rays[(gap_at + 1) % n].1;
    let last = rays[gap_at].1;
    if first == last {
        return Err(Error::RankOne);
    }
    let (lo, hi) = (first.min(last), first.max(last));
    match column_combination(p, lo, hi, tol) {
        Ok(comb) => Ok((comb.base, comb)),
        Err(Error::NotRepresentable { .. }) => Err(Error::RankTooHigh {
            rank: numerical_rank(p, tol).max(3),
        }),
        Err(e) => Err(e),
    }
}

/// Rank-one mixture from the margins of `P`.
pub fn rank_one_representation(p: &ProbabilityMatrix) -> MixtureRepresentation {
    MixtureRepresentation::new(vec![1.0], vec![p.row_sums()], vec![p.col_sums()])
        .expect("margins of a probability matrix are probability vectors")
}

/// Exact nonnegative factorization of a matrix of rank at most two.
///
/// Rank one yields a single component built from the margins. Rank two
/// yields two components whose column factors are the normalized extremal
/// columns.
pub fn factorize_rank2(p: &ProbabilityMatrix, tol: f64) -> Result<MixtureRepresentation> {
    let rank = numerical_rank(p, tol);
    if rank >= 3 {
        return Err(Error::RankTooHigh { rank });
    }
    if rank <= 1 {
        return Ok(rank_one_representation(p));
    }
    let comb = match extremal_pair(p, tol) {
        Ok((_, comb)) => comb,
        Err(Error::RankOne) => return Ok(rank_one_representation(p)),
        Err(e) => return Err(e),
    };
    Ok(mixture_from_combination(&comb, p.cols()))
}

fn mixture_from_combination(comb: &ColumnCombination, cols: usize) -> MixtureRepresentation {
    let ChartId { j1, j2 } = comb.base;
    let sx: f64 = comb.x.iter().sum();
    let sy: f64 = comb.y.iter().sum();
    let (st, ss) = (comb.sum_t(), comb.sum_s());
    let alpha = ((st + 1.0) * sx).clamp(0.0, 1.0);

    let mut u = vec![0.0; cols];
    let mut v = vec![0.0; cols];
    u[j1] = 1.0 / (1.0 + st);
    v[j2] = 1.0 / (1.0 + ss);
    for &(j, t, s) in &comb.coeffs {
        u[j] = t / (1.0 + st);
        v[j] = s / (1.0 + ss);
    }
    let a: Vec<f64> = comb.x.iter().map(|x| x / sx).collect();
    let c: Vec<f64> = comb.y.iter().map(|y| y / sy).collect();
    MixtureRepresentation::new(vec![alpha, 1.0 - alpha], vec![a, c], vec![u, v])
        .expect("normalized extremal columns form a valid mixture")
}

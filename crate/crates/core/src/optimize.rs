//! Maximizing objectives over the rank-two model chart by chart.
//!
//! Each chart turns the problem into a box-and-simplex constrained problem
//! in the minimal number of variables. [`optimize_chart`] runs projected
//! gradient ascent with numerical gradients inside one chart;
//! [`maximize_over_model`] combines the closed-form rank-one fit with a
//! multistart search in every chart and sorts the chart optima by where
//! they land (interior, boundary of the model, rank one, or proportional
//! columns needing a cross-chart check).

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts::{
    chart_dim, chart_forward, chart_inverse, classify, forward_raw, is_interior, ChartId,
    ChartPoint, Flags, PointFlag, DEFAULT_CLASSIFY_TOL, DOMAIN_SLACK,
};
use crate::error::{Error, Result};
use crate::matrix::{ContingencyTable, ProbabilityMatrix, Shape};

/// A pure, deterministic function on probability matrices. `-inf` marks
/// matrices where the objective is undefined.
pub trait Objective: Sync {
    fn evaluate(&self, p: &ProbabilityMatrix) -> f64;
}

impl<F> Objective for F
where
    F: Fn(&ProbabilityMatrix) -> f64 + Sync,
{
    fn evaluate(&self, p: &ProbabilityMatrix) -> f64 {
        self(p)
    }
}

/// `sum n_ij ln p_ij` with `0 ln 0 = 0`.
pub fn loglikelihood(table: &ContingencyTable, p: &ProbabilityMatrix) -> Result<f64> {
    if table.shape() != p.shape() {
        return Err(Error::ShapeMismatch {
            expected: table.shape().to_string(),
            found: p.shape().to_string(),
        });
    }
    Ok(loglik_unchecked(table, p))
}

fn loglik_unchecked(table: &ContingencyTable, p: &ProbabilityMatrix) -> f64 {
    let mut total = 0.0;
    for (&n, &q) in table.counts().iter().zip(p.entries()) {
        if n == 0 {
            continue;
        }
        if q <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += n as f64 * q.ln();
    }
    total
}

/// Log-likelihood of a fixed table as an [`Objective`].
#[derive(Debug, Clone)]
pub struct LogLikelihood {
    table: ContingencyTable,
}

impl LogLikelihood {
    pub fn new(table: ContingencyTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &ContingencyTable {
        &self.table
    }
}

impl Objective for LogLikelihood {
    fn evaluate(&self, p: &ProbabilityMatrix) -> f64 {
        if p.shape() != self.table.shape() {
            return f64::NAN;
        }
        loglik_unchecked(&self.table, p)
    }
}

/// Independence-model MLE: product of the empirical margins.
pub fn mle_rank1(table: &ContingencyTable) -> Result<ProbabilityMatrix> {
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    let n = table.total() as f64;
    let rows: Vec<f64> = table.row_margins().iter().map(|&r| r as f64 / n).collect();
    let cols: Vec<f64> = table.col_margins().iter().map(|&c| c as f64 / n).collect();
    let raw: Vec<f64> = rows
        .iter()
        .flat_map(|r| cols.iter().map(move |c| r * c))
        .collect();
    ProbabilityMatrix::new(table.shape(), &raw)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub multistarts: usize,
    pub seed: u64,
    pub fd_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            multistarts: 16,
            seed: 0,
            fd_step: 1e-6,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSettings(what.to_string()));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if self.multistarts == 0 {
            return bad("multistarts must be positive");
        }
        if !(self.grad_tol > 0.0 && self.armijo_c > 0.0 && self.fd_step > 0.0) {
            return bad("grad_tol, armijo_c and fd_step must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitSource {
    Rank1,
    Chart(ChartId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub value: f64,
    pub source: FitSource,
    pub flags: Flags,
    pub matrix: ProbabilityMatrix,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub point: Option<ChartPoint>,
    pub iterations: usize,
}

/// Projection of `v` onto `{w >= 0, sum w <= 1}`.
pub fn project_capped_simplex(v: &mut [f64]) {
    let clipped_sum: f64 = v.iter().map(|x| x.max(0.0)).sum();
    if clipped_sum <= 1.0 {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
        return;
    }
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut shift = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        prefix += u;
        let candidate = (prefix - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        } else {
            break;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - shift).max(0.0));
}

fn project_coords(shape: Shape, coords: &mut [f64]) {
    let (ra, rb) = (shape.rows - 1, shape.cols - 2);
    let (a, rest) = coords.split_at_mut(ra);
    let (b, rest) = rest.split_at_mut(rb);
    let (c, rest) = rest.split_at_mut(ra);
    let (d, rest) = rest.split_at_mut(rb);
    project_capped_simplex(a);
    project_capped_simplex(b);
    project_capped_simplex(c);
    project_capped_simplex(d);
    rest[0] = rest[0].clamp(0.0, 1.0);
}

/// Euclidean projection of a raw `D`-vector onto the domain of `chart`.
pub fn project_domain(raw: &[f64], chart: ChartId, shape: Shape) -> Result<ChartPoint> {
    let dim = chart_dim(shape)?;
    if raw.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "expected {dim} coordinates, got {}",
            raw.len()
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut coords = raw.to_vec();
    project_coords(shape, &mut coords);
    ChartPoint::from_coords(chart, shape, &coords)
}

fn coords_feasible(shape: Shape, coords: &[f64]) -> bool {
    let (ra, rb) = (shape.rows - 1, shape.cols - 2);
    let ok = |v: &[f64]| {
        let s: f64 = v.iter().sum();
        v.iter().all(|&x| x >= -DOMAIN_SLACK) && s <= 1.0 + DOMAIN_SLACK
    };
    let alpha = coords[2 * ra + 2 * rb];
    ok(&coords[..ra])
        && ok(&coords[ra..ra + rb])
        && ok(&coords[ra + rb..2 * ra + rb])
        && ok(&coords[2 * ra + rb..2 * ra + 2 * rb])
        && (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&alpha)
}

/// `F` composed with one chart, evaluated on flat coordinates.
struct ChartObjective<'a, F: Objective + ?Sized> {
    f: &'a F,
    chart: ChartId,
    shape: Shape,
}

impl<F: Objective + ?Sized> ChartObjective<'_, F> {
    fn matrix(&self, coords: &[f64]) -> Option<ProbabilityMatrix> {
        let raw = forward_raw(self.chart, self.shape, coords);
        ProbabilityMatrix::new(self.shape, &raw).ok()
    }

    fn value(&self, coords: &[f64]) -> f64 {
        self.matrix(coords)
            .map_or(f64::NAN, |p| self.f.evaluate(&p))
    }

    /// Central differences, one-sided where a probe would leave the domain
    /// or hit an undefined value.
    fn gradient(&self, coords: &[f64], value: f64, step: f64) -> Vec<f64> {
        let mut probe = coords.to_vec();
        let mut grad = vec![0.0; coords.len()];
        let side = |probe: &mut Vec<f64>, k: usize, delta: f64| -> Option<f64> {
            probe[k] = coords[k] + delta;
            let out = if coords_feasible(self.shape, probe) {
                let v = self.value(probe);
                (v.is_finite()).then_some(v)
            } else {
                None
            };
            probe[k] = coords[k];
            out
        };
        for (k, g) in grad.iter_mut().enumerate() {
            let plus = side(&mut probe, k, step);
            let minus = side(&mut probe, k, -step);
            *g = match (plus, minus) {
                (Some(p), Some(m)) => (p - m) / (2.0 * step),
                (Some(p), None) => (p - value) / step,
                (None, Some(m)) => (value - m) / step,
                (None, None) => 0.0,
            };
        }
        grad
    }
}

/// Numerical gradient of `F` composed with the chart of `point`.
pub fn objective_gradient<F: Objective + ?Sized>(
    f: &F,
    point: &ChartPoint,
    step: f64,
) -> Result<Vec<f64>> {
    let obj = ChartObjective {
        f,
        chart: point.chart(),
        shape: point.shape(),
    };
    let coords = point.coords();
    let value = obj.value(&coords);
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    let grad = obj.gradient(&coords, value, step);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(grad)
}

/// One accepted iterate of [`optimize_chart_traced`].
#[derive(Debug, Clone, Copy)]
pub struct Iterate<'a> {
    pub iteration: usize,
    pub value: f64,
    pub coords: &'a [f64],
}

/// Projected gradient ascent of `F` composed with `init`'s chart.
pub fn optimize_chart<F: Objective + ?Sized>(
    f: &F,
    init: &ChartPoint,
    settings: &OptimizerSettings,
) -> Result<FitResult> {
    optimize_chart_traced(f, init, settings, |_| {})
}

/// [`optimize_chart`] reporting every accepted iterate (iteration 0 is the
/// starting point).
pub fn optimize_chart_traced<F: Objective + ?Sized>(
    f: &F,
    init: &ChartPoint,
    settings: &OptimizerSettings,
    mut observe: impl FnMut(Iterate<'_>),
) -> Result<FitResult> {
    settings.validate()?;
    let start = chart_forward(init)?;
    let chart = init.chart();
    let shape = init.shape();
    let obj = ChartObjective { f, chart, shape };

    let mut coords = init.coords();
    let mut matrix = start;
    let mut value = f.evaluate(&matrix);
    if value == f64::NEG_INFINITY {
        return Err(Error::ObjectiveUndefined);
    }
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    observe(Iterate {
        iteration: 0,
        value,
        coords: &coords,
    });

    let mut iterations = 0;
    let mut last_step: Option<f64> = None;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trial = coords.clone();
    while iterations < settings.max_iters {
        let grad = obj.gradient(&coords, value, settings.fd_step);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite);
        }

        trial
            .iter_mut()
            .zip(coords.iter().zip(&grad))
            .for_each(|(t, (x, g))| *t = x + g);
        project_coords(shape, &mut trial);
        let stationarity = trial
            .iter()
            .zip(&coords)
            .map(|(t, x)| (t - x).abs())
            .fold(0.0, f64::max);
        if stationarity <= settings.grad_tol {
            break;
        }

        let gmax = grad.iter().map(|g| g.abs()).fold(0.0, f64::max);
        let mut step = initial_step(previous.as_ref(), &coords, &grad, last_step, gmax);

        let mut accepted = None;
        for _ in 0..80 {
            trial
                .iter_mut()
                .zip(coords.iter().zip(&grad))
                .for_each(|(t, (x, g))| *t = x + step * g);
            project_coords(shape, &mut trial);
            let ascent: f64 = grad
                .iter()
                .zip(trial.iter().zip(&coords))
                .map(|(g, (t, x))| g * (t - x))
                .sum();
            if ascent <= 0.0 {
                break;
            }
            if let Some(p) = obj.matrix(&trial) {
                let v = f.evaluate(&p);
                if v.is_finite() && v >= value + settings.armijo_c * ascent {
                    accepted = Some((p, v));
                    break;
                }
            }
            step *= settings.backtrack_factor;
        }
        let Some((p, v)) = accepted else {
            break;
        };

        previous = Some((coords.clone(), grad));
        coords.copy_from_slice(&trial);
        matrix = p;
        value = v;
        last_step = Some(step);
        iterations += 1;
        observe(Iterate {
            iteration: iterations,
            value,
            coords: &coords,
        });
    }

    let point = ChartPoint::from_coords(chart, shape, &coords)?;
    let flags = classify(&point, DEFAULT_CLASSIFY_TOL)?;
    Ok(FitResult {
        value,
        source: FitSource::Chart(chart),
        flags,
        matrix,
        point: Some(point),
        iterations,
    })
}

/// Barzilai-Borwein step when curvature information is usable, otherwise
/// a growth of the last accepted step.
fn initial_step(
    previous: Option<&(Vec<f64>, Vec<f64>)>,
    coords: &[f64],
    grad: &[f64],
    last_step: Option<f64>,
    gmax: f64,
) -> f64 {
    let fallback = match last_step {
        Some(s) => s * 2.0,
        None => 0.1 / gmax.max(f64::MIN_POSITIVE),
    };
    let Some((x_prev, g_prev)) = previous else {
        return fallback;
    };
    let mut ss = 0.0;
    let mut sy = 0.0;
    for k in 0..coords.len() {
        let s = coords[k] - x_prev[k];
        let y = grad[k] - g_prev[k];
        ss += s * s;
        sy += s * y;
    }
    // ascent on a locally concave function has s.y < 0
    if sy < 0.0 && ss > 0.0 {
        let bb = ss / -sy;
        if bb.is_finite() && bb > 0.0 {
            return bb;
        }
    }
    fallback
}

/// Deterministic interior starting points for one chart: a randomly
/// shifted Halton sequence mapped into the domain, each simplex block via
/// normalized exponentials.
pub fn start_points(
    chart: ChartId,
    shape: Shape,
    count: usize,
    seed: u64,
) -> Result<Vec<ChartPoint>> {
    chart_dim(shape)?;
    chart.check_cols(shape.cols)?;
    let (ra, rb) = (shape.rows - 1, shape.cols - 2);
    let blocks = [ra, rb, ra, rb];
    let uniforms = blocks.iter().map(|m| m + 1).sum::<usize>() + 1;
    let primes = first_primes(uniforms);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chart_stream(chart));
    let shift: Vec<f64> = (0..uniforms).map(|_| rng.random::<f64>()).collect();

    (1..=count as u64)
        .map(|index| {
            let u: Vec<f64> = primes
                .iter()
                .zip(&shift)
                .map(|(&p, s)| {
                    (radical_inverse(index, p) + s)
                        .fract()
                        .clamp(1e-3, 1.0 - 1e-3)
                })
                .collect();
            let mut coords = Vec::with_capacity(uniforms - 4);
            let mut offset = 0;
            for &m in &blocks {
                let e: Vec<f64> = u[offset..offset + m + 1].iter().map(|x| -x.ln()).collect();
                let total: f64 = e.iter().sum();
                coords.extend(e[..m].iter().map(|x| x / total));
                offset += m + 1;
            }
            coords.push(0.05 + 0.9 * u[offset]);
            ChartPoint::from_coords(chart, shape, &coords)
        })
        .collect()
}

fn chart_stream(chart: ChartId) -> u64 {
    ((chart.j1 as u64) << 32) | chart.j2 as u64
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * inv;
        index /= base;
        inv /= base as f64;
    }
    out
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut n = 2;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= n)
            .all(|&p| n % p != 0)
        {
            primes.push(n);
        }
        n += 1;
    }
    primes
}

/// Best of `settings.multistarts` runs of [`optimize_chart`] in one chart.
/// Ties keep the earliest start.
pub fn multistart_chart<F: Objective + ?Sized>(
    f: &F,
    chart: ChartId,
    shape: Shape,
    settings: &OptimizerSettings,
) -> Result<FitResult> {
    settings.validate()?;
    let starts = start_points(chart, shape, settings.multistarts, settings.seed)?;
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for start in &starts {
        match optimize_chart(f, start, settings) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.value > b.value) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::ObjectiveUndefined))
}

/// How [`maximize_over_model`] treated one chart optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The closed-form rank-one fit.
    Rank1,
    Interior,
    BoundaryOfModel,
    /// Rank-one image; covered by the rank-one fit.
    DeferredToRank1,
    /// Proportional columns, and no adjacent chart improves on it.
    CrossChecked,
    /// Proportional columns, and some adjacent chart improves on it.
    Rejected,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        matches!(
            self,
            Verdict::Rank1 | Verdict::Interior | Verdict::BoundaryOfModel | Verdict::CrossChecked
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub result: FitResult,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub best: FitResult,
    /// Every candidate in processing order; the rank-one fit comes first.
    pub candidates: Vec<Candidate>,
}

/// The closed-form rank-one fit as a [`FitResult`].
pub fn fit_rank1(table: &ContingencyTable) -> Result<FitResult> {
    rank1_fit(&LogLikelihood::new(table.clone()), table)
}

fn rank1_fit<F: Objective + ?Sized>(f: &F, table: &ContingencyTable) -> Result<FitResult> {
    let matrix = mle_rank1(table)?;
    Ok(FitResult {
        value: f.evaluate(&matrix),
        source: FitSource::Rank1,
        flags: Flags::from([PointFlag::RankOne]),
        matrix,
        point: None,
        iterations: 0,
    })
}

/// Maximum-likelihood fit over rank-at-most-two probability matrices.
pub fn maximize_over_model(
    table: &ContingencyTable,
    settings: &OptimizerSettings,
) -> Result<FitResult> {
    maximize_over_model_report(table, settings).map(|m| m.best)
}

/// [`maximize_over_model`] with the verdict for every candidate considered.
pub fn maximize_over_model_report(
    table: &ContingencyTable,
    settings: &OptimizerSettings,
) -> Result<ModelFit> {
    settings.validate()?;
    let f = LogLikelihood::new(table.clone());
    let rank1 = rank1_fit(&f, table)?;
    let shape = table.shape();
    let mut candidates = vec![Candidate {
        result: rank1,
        verdict: Verdict::Rank1,
    }];
    if shape.require_chartable().is_err() {
        let best = candidates[0].result.clone();
        return Ok(ModelFit { best, candidates });
    }

    let charts = ChartId::all(shape.cols);
    let per_chart: Vec<Option<FitResult>> = charts
        .par_iter()
        .map(|&chart| multistart_chart(&f, chart, shape, settings).ok())
        .collect();

    let mut queue: VecDeque<FitResult> = per_chart.into_iter().flatten().collect();
    let mut extra_budget = 4 * charts.len();
    while let Some(result) = queue.pop_front() {
        let verdict = if result.flags.contains(&PointFlag::RankOne) {
            Verdict::DeferredToRank1
        } else if is_interior(&result.flags) {
            Verdict::Interior
        } else if result.flags.contains(&PointFlag::BoundaryOfM) {
            Verdict::BoundaryOfModel
        } else {
            let improvements = cross_check(&f, &result, &charts, settings);
            if improvements.is_empty() {
                Verdict::CrossChecked
            } else {
                for r in improvements {
                    if extra_budget > 0 {
                        extra_budget -= 1;
                        queue.push_back(r);
                    }
                }
                Verdict::Rejected
            }
        };
        candidates.push(Candidate { result, verdict });
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| candidates[i].result.source);
    let mut best: Option<&FitResult> = None;
    for &i in &order {
        let c = &candidates[i];
        if c.verdict.accepted() && best.is_none_or(|b| c.result.value > b.value) {
            best = Some(&c.result);
        }
    }
    let best = best.expect("rank-one candidate is always accepted").clone();
    Ok(ModelFit { best, candidates })
}

/// Re-optimizes from the same matrix in every other chart whose domain
/// boundary contains it; returns the runs that improve on `result` by more
/// than `grad_tol * max(1, |value|)`.
fn cross_check<F: Objective + ?Sized>(
    f: &F,
    result: &FitResult,
    charts: &[ChartId],
    settings: &OptimizerSettings,
) -> Vec<FitResult> {
    let own = match result.source {
        FitSource::Chart(c) => c,
        FitSource::Rank1 => return Vec::new(),
    };
    let margin = settings.grad_tol * result.value.abs().max(1.0);
    charts
        .iter()
        .filter(|&&c| c != own)
        .filter_map(|&c| {
            let q = chart_inverse(c, &result.matrix, DEFAULT_CLASSIFY_TOL).ok()?;
            let flags = classify(&q, DEFAULT_CLASSIFY_TOL).ok()?;
            if is_interior(&flags) {
                return None;
            }
            let r = optimize_chart(f, &q, settings).ok()?;
            (r.value > result.value + margin).then_some(r)
        })
        .collect()
}

/// Exhaustive search of `F` composed with a chart over the grid of spacing
/// `resolution` in the parameter domain. Limited to `D <= 5`.
pub fn grid_oracle<F: Objective + ?Sized>(
    f: &F,
    chart: ChartId,
    shape: Shape,
    resolution: f64,
) -> Result<(ChartPoint, f64)> {
    const MAX_DIM: usize = 5;
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::InvalidResolution(resolution));
    }
    let dim = chart_dim(shape)?;
    chart.check_cols(shape.cols)?;
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
    }
    let steps = (1.0 / resolution + 1e-9).floor() as usize;
    let level = |k: usize| (k as f64 * resolution).min(1.0);
    let (ra, rb) = (shape.rows - 1, shape.cols - 2);
    let block_of = |k: usize| -> usize {
        match k {
            k if k < ra => 0,
            k if k < ra + rb => 1,
            k if k < 2 * ra + rb => 2,
            k if k < 2 * ra + 2 * rb => 3,
            _ => 4,
        }
    };

    let mut digits = vec![0usize; dim];
    let mut best: Option<(Vec<f64>, f64)> = None;
    loop {
        let coords: Vec<f64> = digits.iter().map(|&k| level(k)).collect();
        let mut sums = [0.0; 4];
        for (k, &v) in coords.iter().enumerate() {
            let b = block_of(k);
            if b < 4 {
                sums[b] += v;
            }
        }
        if sums.iter().all(|&s| s <= 1.0 + 1e-9) {
            let mut feasible = coords.clone();
            project_coords(shape, &mut feasible);
            let point = ChartPoint::from_coords(chart, shape, &feasible)?;
            if let Ok(p) = chart_forward(&point) {
                let v = f.evaluate(&p);
                let better = match &best {
                    None => true,
                    Some((_, bv)) => v > *bv,
                };
                if better && !v.is_nan() {
                    best = Some((feasible, v));
                }
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == dim {
                let (coords, v) = best.ok_or(Error::ObjectiveUndefined)?;
                return Ok((ChartPoint::from_coords(chart, shape, &coords)?, v));
            }
            digits[k] += 1;
            if digits[k] <= steps {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

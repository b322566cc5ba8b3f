//! Spanning, separated and cover-refinement counts, and their growth rates.
//!
//! Spanning uses `span <= ε` (non-strict), separation uses `sep > ε`
//! (strict). With that placement `span(ε) <= sep(ε) <= span(ε/2)` holds
//! exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitset::BitSet;
use crate::covers::{self, Cover, CoverError};
use crate::metric::{bowen_metric, DistanceMatrix, EndoMap, FiniteMetricSpace, MetricError};
use crate::solver::{self, CountResult, Graph, SolveMode, SolverError, SolverOptions};

/// `metric_sep` of a single point: above every grain in `[0, 1]`.
pub const SEP_SENTINEL: f64 = 2.0;

/// Default spread tolerance, in nats, for declaring an ε-sweep stabilized.
pub const DEFAULT_STABILITY_TOL: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum ComplexityError {
    #[error("subset is empty")]
    EmptySubset,
    #[error("point {index} out of range 0..{size}")]
    PointOutOfRange { index: usize, size: usize },
    #[error("grain {0} must be finite and non-negative")]
    InvalidEps(f64),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("invalid ε-grid: {0}")]
    InvalidGrid(String),
    #[error("window {lo}..={hi} is empty or outside 1..={horizon}")]
    WindowEmpty { lo: usize, hi: usize, horizon: usize },
    #[error("need at least 3 estimates, got {0}")]
    InsufficientGrid(usize),
    #[error("rate sequence must be non-decreasing and positive: {0:?}")]
    InvalidRates(Vec<u64>),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Which complexity notion a count measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cover,
    Span,
    Sep,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cover, Method::Span, Method::Sep];
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Cover => "cover",
            Method::Span => "span",
            Method::Sep => "sep",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cover" => Ok(Method::Cover),
            "span" => Ok(Method::Span),
            "sep" => Ok(Method::Sep),
            other => Err(format!("unknown method {other:?}, expected cover, span or sep")),
        }
    }
}

/// A non-empty set of point indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSubset {
    members: BitSet,
}

impl FiniteSubset {
    pub fn new(size: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self, ComplexityError> {
        let mut members = BitSet::new(size);
        for i in indices {
            if i >= size {
                return Err(ComplexityError::PointOutOfRange { index: i, size });
            }
            members.insert(i);
        }
        if members.is_empty() {
            return Err(ComplexityError::EmptySubset);
        }
        Ok(FiniteSubset { members })
    }

    pub fn members(&self) -> &BitSet {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn check_subset(a: &FiniteSubset, metric: &DistanceMatrix) -> Result<(), ComplexityError> {
    if a.members.capacity() != metric.len() {
        return Err(ComplexityError::PointOutOfRange {
            index: a.members.capacity(),
            size: metric.len(),
        });
    }
    Ok(())
}

/// `max_x min_{a ∈ A} metric(x, a)`.
pub fn metric_span(a: &FiniteSubset, metric: &DistanceMatrix) -> Result<f64, ComplexityError> {
    check_subset(a, metric)?;
    Ok((0..metric.len())
        .map(|x| {
            let row = metric.row(x);
            a.members.iter().map(|j| row[j]).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

/// `min_{a != a'} metric(a, a')`, or [`SEP_SENTINEL`] for a single point.
pub fn metric_sep(a: &FiniteSubset, metric: &DistanceMatrix) -> Result<f64, ComplexityError> {
    check_subset(a, metric)?;
    let members = a.members.to_vec();
    let mut best = SEP_SENTINEL;
    for (k, &i) in members.iter().enumerate() {
        let row = metric.row(i);
        for &j in &members[k + 1..] {
            best = best.min(row[j]);
        }
    }
    Ok(best)
}

fn check_eps(eps: f64) -> Result<(), ComplexityError> {
    if eps.is_finite() && eps >= 0.0 {
        Ok(())
    } else {
        Err(ComplexityError::InvalidEps(eps))
    }
}

/// The graph joining distinct points at distance `<= eps`.
pub fn proximity_graph(metric: &DistanceMatrix, eps: f64) -> Graph {
    let n = metric.len();
    Graph::from_adjacency(
        (0..n)
            .map(|i| {
                let row = metric.row(i);
                BitSet::from_indices(n, (0..n).filter(|&j| j != i && row[j] <= eps))
            })
            .collect(),
    )
}

/// Smallest `|A|` with `metric_span(A) <= eps`: a minimum dominating set of
/// the proximity graph.
pub fn spanning_count(metric: &DistanceMatrix, eps: f64, opts: SolverOptions) -> Result<CountResult, ComplexityError> {
    check_eps(eps)?;
    Ok(solver::dominating_set_size(&proximity_graph(metric, eps), opts)?)
}

/// Largest `|A|` with `metric_sep(A) > eps`: a maximum independent set of the
/// proximity graph.
pub fn separated_count(metric: &DistanceMatrix, eps: f64, opts: SolverOptions) -> Result<CountResult, ComplexityError> {
    check_eps(eps)?;
    Ok(solver::independent_set_size(&proximity_graph(metric, eps), opts)?)
}

pub fn min_spanning_count(
    space: &FiniteMetricSpace,
    map: &EndoMap,
    n: usize,
    eps: f64,
    opts: SolverOptions,
) -> Result<CountResult, ComplexityError> {
    check_eps(eps)?;
    spanning_count(bowen_metric(space, map, n)?.matrix(), eps, opts)
}

pub fn max_separated_count(
    space: &FiniteMetricSpace,
    map: &EndoMap,
    n: usize,
    eps: f64,
    opts: SolverOptions,
) -> Result<CountResult, ComplexityError> {
    check_eps(eps)?;
    separated_count(bowen_metric(space, map, n)?.matrix(), eps, opts)
}

/// Minimal subcover size of the refinement `a ∨ f^{-1}a ∨ ... ∨ f^{-(n-1)}a`.
pub fn cover_complexity(
    space: &FiniteMetricSpace,
    map: &EndoMap,
    n: usize,
    a: &Cover<'_>,
    opts: SolverOptions,
) -> Result<CountResult, ComplexityError> {
    if n == 0 {
        return Err(ComplexityError::InvalidHorizon);
    }
    if !a.space().same_as(space) {
        return Err(CoverError::SpaceMismatch.into());
    }
    let refined = covers::dyn_refine_reduced_sequence(map, n, a)?;
    Ok(covers::min_subcover_size(refined.last().expect("n >= 1"), opts)?)
}

/// Exact when the budget allows, greedy otherwise.
fn with_fallback(
    opts: SolverOptions,
    solve: impl Fn(SolverOptions) -> Result<CountResult, ComplexityError>,
) -> Result<CountResult, ComplexityError> {
    match solve(opts) {
        Err(ComplexityError::Solver(SolverError::BudgetExceeded { .. })) => solve(SolverOptions::greedy()),
        other => other,
    }
}

/// Counts `a_1 <= a_2 <= ... <= a_N`, all at least 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct RateSequence {
    counts: Vec<u64>,
}

impl RateSequence {
    pub fn new(counts: Vec<u64>) -> Result<Self, ComplexityError> {
        if counts.is_empty() || counts.contains(&0) || counts.windows(2).any(|w| w[0] > w[1]) {
            return Err(ComplexityError::InvalidRates(counts));
        }
        Ok(RateSequence { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn horizon(&self) -> usize {
        self.counts.len()
    }

    /// Count at horizon `n` (1-based).
    pub fn at(&self, n: usize) -> u64 {
        self.counts[n - 1]
    }
}

impl TryFrom<Vec<u64>> for RateSequence {
    type Error = ComplexityError;

    fn try_from(v: Vec<u64>) -> Result<Self, Self::Error> {
        RateSequence::new(v)
    }
}

impl From<RateSequence> for Vec<u64> {
    fn from(r: RateSequence) -> Self {
        r.counts
    }
}

/// `ln(a_n) / n` for `n = 1..=N`.
pub fn log_rate(rates: &RateSequence) -> Vec<f64> {
    rates
        .counts
        .iter()
        .enumerate()
        .map(|(i, &a)| (a as f64).ln() / (i + 1) as f64)
        .collect()
}

/// An inclusive 1-based range of horizons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

impl Window {
    /// The upper half `N/2 + 1 ..= N`.
    pub fn upper_half(horizon: usize) -> Self {
        Window {
            lo: horizon / 2 + 1,
            hi: horizon,
        }
    }

    fn check(&self, horizon: usize) -> Result<(), ComplexityError> {
        if self.lo == 0 || self.lo > self.hi || self.hi > horizon {
            return Err(ComplexityError::WindowEmpty {
                lo: self.lo,
                hi: self.hi,
                horizon,
            });
        }
        Ok(())
    }
}

/// Maximum of the log-rates over `window`.
pub fn log_lim(rates: &RateSequence, window: Window) -> Result<f64, ComplexityError> {
    window.check(rates.horizon())?;
    Ok(log_rate(rates)[window.lo - 1..window.hi]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Least-squares slope of `ln a_n` against `n` over `window`; the
/// per-step growth once transients are discarded.
pub fn growth_slope(rates: &RateSequence, window: Window) -> Result<f64, ComplexityError> {
    window.check(rates.horizon())?;
    if window.lo == window.hi {
        return Ok(0.0);
    }
    let pts: Vec<(f64, f64)> = (window.lo..=window.hi)
        .map(|n| (n as f64, (rates.at(n) as f64).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// One row of a sweep: the rate sequence of one method at one grain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub method: Method,
    pub eps: f64,
    pub rates: RateSequence,
    pub log_rates: Vec<f64>,
    pub loglim: f64,
    pub window: Window,
    /// `exact[n-1]`: the count at horizon `n` is an exact optimum.
    pub exact: Vec<bool>,
    pub slope: f64,
    /// Cover method only: per horizon, the largest count over catalogued
    /// covers of diameter at least `eps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalogue_sup: Option<Vec<u64>>,
}

impl EntropyEstimate {
    pub fn all_exact(&self) -> bool {
        self.exact.iter().all(|&e| e)
    }
}

/// Parameters of a pressure sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub method: Method,
    /// Strictly decreasing grains in `(0, 1]`.
    pub eps_grid: Vec<f64>,
    pub n_max: usize,
    pub solver: SolverOptions,
    /// Defaults to the upper half of `1..=n_max`.
    pub window: Option<Window>,
}

pub fn check_grid(grid: &[f64]) -> Result<(), ComplexityError> {
    if grid.is_empty() {
        return Err(ComplexityError::InvalidGrid("empty".into()));
    }
    if let Some(&e) = grid.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(ComplexityError::InvalidGrid(format!("entry {e} outside (0, 1]")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[0] <= w[1]) {
        return Err(ComplexityError::InvalidGrid(format!(
            "entries must strictly decrease, got {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `table[e][n-1]` for the span or sep method. Bowen matrices are built once
/// per horizon; a horizon whose matrix equals the previous one reuses its
/// counts.
fn metric_table(
    space: &FiniteMetricSpace,
    map: &EndoMap,
    method: Method,
    grid: &[f64],
    n_max: usize,
    opts: SolverOptions,
) -> Result<Vec<Vec<CountResult>>, ComplexityError> {
    let count = |m: &DistanceMatrix, eps: f64| match method {
        Method::Span => with_fallback(opts, |o| spanning_count(m, eps, o)),
        Method::Sep => with_fallback(opts, |o| separated_count(m, eps, o)),
        Method::Cover => unreachable!("cover counts use refined covers"),
    };
    let mut table = vec![Vec::with_capacity(n_max); grid.len()];
    let mut bowen = bowen_metric(space, map, 1)?;
    let mut row: Vec<CountResult> = Vec::new();
    for n in 1..=n_max {
        let unchanged = if n > 1 {
            let next = bowen.step();
            let same = next.matrix() == bowen.matrix();
            bowen = next;
            same
        } else {
            false
        };
        if !unchanged {
            row = grid
                .par_iter()
                .map(|&eps| count(bowen.matrix(), eps))
                .collect::<Result<Vec<_>, _>>()?;
        }
        for (col, r) in table.iter_mut().zip(&row) {
            col.push(*r);
        }
    }
    Ok(table)
}

fn cover_table(
    space: &FiniteMetricSpace,
    map: &EndoMap,
    grid: &[f64],
    n_max: usize,
    opts: SolverOptions,
) -> Result<(Vec<Vec<CountResult>>, Vec<f64>), ComplexityError> {
    let per_eps = grid
        .par_iter()
        .map(|&eps| {
            let udc = covers::free_udc(space, eps)?;
            let refined = covers::dyn_refine_reduced_sequence(map, n_max, udc.cover())?;
            let counts = refined
                .par_iter()
                .map(|c| with_fallback(opts, |o| Ok(covers::min_subcover_size(c, o)?)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((counts, covers::diameter(udc.cover())))
        })
        .collect::<Result<Vec<_>, ComplexityError>>()?;
    Ok(per_eps.into_iter().unzip())
}

/// Enforces monotonicity in `n` and in decreasing ε by running maxima. A
/// count raised by the maximum is no longer an exact optimum.
fn monotonize(table: &[Vec<CountResult>]) -> Vec<Vec<(u64, bool)>> {
    let mut out: Vec<Vec<(u64, bool)>> = Vec::with_capacity(table.len());
    for (e, col) in table.iter().enumerate() {
        let mut row: Vec<(u64, bool)> = Vec::with_capacity(col.len());
        for (i, r) in col.iter().enumerate() {
            let own = r.value as u64;
            let mut v = own;
            if i > 0 {
                v = v.max(row[i - 1].0);
            }
            if e > 0 {
                v = v.max(out[e - 1][i].0);
            }
            row.push((v, r.is_exact() && v == own));
        }
        out.push(row);
    }
    out
}

/// One [`EntropyEstimate`] per grain, in grid order.
///
/// Exact searches that exhaust the budget fall back to greedy for that cell
/// and flag it. The result does not depend on the rayon pool size.
pub fn pressure_sweep(
    space: &FiniteMetricSpace,
    map: &EndoMap,
    spec: &SweepSpec,
) -> Result<Vec<EntropyEstimate>, ComplexityError> {
    check_grid(&spec.eps_grid)?;
    if spec.n_max < 2 {
        return Err(ComplexityError::InvalidHorizon);
    }
    map.check_space(space)?;
    let window = spec.window.unwrap_or_else(|| Window::upper_half(spec.n_max));
    window.check(spec.n_max)?;
    let (table, diameters) = match spec.method {
        Method::Cover => {
            let (t, d) = cover_table(space, map, &spec.eps_grid, spec.n_max, spec.solver)?;
            (t, Some(d))
        }
        m => (metric_table(space, map, m, &spec.eps_grid, spec.n_max, spec.solver)?, None),
    };
    let cells = monotonize(&table);
    let mut out = Vec::with_capacity(cells.len());
    for (e, row) in cells.iter().enumerate() {
        let eps = spec.eps_grid[e];
        let rates = RateSequence::new(row.iter().map(|c| c.0).collect())?;
        let catalogue_sup = diameters.as_ref().map(|d| {
            (0..spec.n_max)
                .map(|i| {
                    (0..cells.len())
                        .filter(|&k| d[k] >= eps)
                        .map(|k| cells[k][i].0)
                        .max()
                        .unwrap_or(1)
                })
                .collect()
        });
        out.push(EntropyEstimate {
            method: spec.method,
            eps,
            log_rates: log_rate(&rates),
            loglim: log_lim(&rates, window)?,
            slope: growth_slope(&rates, window)?,
            window,
            exact: row.iter().map(|c| c.1).collect(),
            rates,
            catalogue_sup,
        });
    }
    Ok(out)
}

/// The finest-grain loglim and its stability over the last three grains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: f64,
    pub spread: f64,
    pub tolerance: f64,
    pub stabilized: bool,
}

/// Estimates must be ordered by strictly decreasing ε.
pub fn entropy_extrapolate(estimates: &[EntropyEstimate], tolerance: f64) -> Result<Extrapolation, ComplexityError> {
    if estimates.len() < 3 {
        return Err(ComplexityError::InsufficientGrid(estimates.len()));
    }
    if estimates.windows(2).any(|w| w[0].eps <= w[1].eps) {
        return Err(ComplexityError::InvalidGrid("estimates must have strictly decreasing ε".into()));
    }
    let tail = &estimates[estimates.len() - 3..];
    let hi = tail.iter().map(|e| e.loglim).fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().map(|e| e.loglim).fold(f64::INFINITY, f64::min);
    let spread = hi - lo;
    Ok(Extrapolation {
        value: tail[2].loglim,
        spread,
        tolerance,
        stabilized: spread <= tolerance,
    })
}

/// Which solver produced a count, for reporting.
pub fn mode_of(exact: bool) -> SolveMode {
    if exact {
        SolveMode::Exact
    } else {
        SolveMode::Greedy
    }
}

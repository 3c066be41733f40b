//! Node metrics and the pairwise sortability score.
//!
//! A sortability score is the fraction of causally connected node pairs
//! `j ~> i` whose metric increases from cause to effect. Each connected
//! pair counts once however many paths join it, and pairs on a common cycle
//! are skipped.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{ancestral_closure, bool_matmul, summary_graph, Adjacency, TsGraph};
use crate::regression::Design;
use crate::simulate::{DataKind, Dataset};
use crate::stats;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Var,
    R2,
    /// R² of `X_i(t)` on all lags of the other processes.
    R2StarTs,
    /// R² of `X_i(t)` on all lags of every process except `X_i(t)` itself.
    R2Ts,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::Var, MetricKind::R2, MetricKind::R2StarTs, MetricKind::R2Ts];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Var => "var",
            MetricKind::R2 => "r2",
            MetricKind::R2StarTs => "r2star_ts",
            MetricKind::R2Ts => "r2_ts",
        }
    }

    pub fn is_time_series(self) -> bool {
        matches!(self, MetricKind::R2StarTs | MetricKind::R2Ts)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "var" => Ok(MetricKind::Var),
            "r2" => Ok(MetricKind::R2),
            "r2star" | "r2star_ts" => Ok(MetricKind::R2StarTs),
            "r2ts" | "r2_ts" => Ok(MetricKind::R2Ts),
            other => Err(Error::param("metric", format!("unknown metric `{other}`"))),
        }
    }
}

/// Notes attached to a metric computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricFlag {
    /// The regression for this node fell back to ridge.
    Ridge { node: usize },
    /// No regressors were available; the value is 0 by convention.
    EmptyRegressors { node: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricVector {
    pub values: Vec<f64>,
    pub kind: MetricKind,
    pub flags: Vec<MetricFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortabilityResult {
    pub score: f64,
    pub n_pairs: usize,
    /// Ties count one half.
    pub n_correct: f64,
    pub tol: f64,
}

/// Sortability of `metric` with respect to the graph `adj`, where
/// `adj[(j, i)]` means `j -> i`.
///
/// Path lengths `1..n-1` are visited in turn; at each length, reachable pairs
/// not yet counted and not mutually ancestral are compared by the ratio
/// `M_i / M_j`. A ratio above `1 + tol` counts 1, a ratio within `tol` of 1
/// counts 1/2. Without comparable pairs the score is 0.5.
pub fn pairwise_sortability(metric: &[f64], adj: &Adjacency, tol: f64) -> Result<SortabilityResult> {
    let n = adj.nrows();
    if adj.ncols() != n {
        return Err(Error::Shape(format!("adjacency is {}x{}", adj.nrows(), adj.ncols())));
    }
    if metric.len() != n {
        return Err(Error::Shape(format!("metric has {} entries for {n} nodes", metric.len())));
    }
    let anc = ancestral_closure(adj);
    let mut ek = adj.clone();
    let mut checked = DMatrix::from_element(n, n, false);
    let mut n_pairs = 0usize;
    let mut n_correct = 0.0;
    for _ in 0..n.saturating_sub(1) {
        for j in 0..n {
            for i in 0..n {
                if !ek[(j, i)] || checked[(j, i)] || anc[(i, j)] {
                    continue;
                }
                checked[(j, i)] = true;
                n_pairs += 1;
                let ratio = metric[i] / metric[j];
                if ratio > 1.0 + tol {
                    n_correct += 1.0;
                } else if ratio >= 1.0 - tol && ratio <= 1.0 + tol {
                    n_correct += 0.5;
                }
            }
        }
        ek = bool_matmul(&ek, adj);
    }
    let score = if n_pairs == 0 { 0.5 } else { n_correct / n_pairs as f64 };
    Ok(SortabilityResult { score, n_pairs, n_correct, tol })
}

/// Sortability on the summary graph of `g`, self-loops removed.
pub fn ts_sortability(metric: &[f64], g: &TsGraph, tol: f64) -> Result<SortabilityResult> {
    let mut adj = summary_graph(g);
    adj.fill_diagonal(false);
    pairwise_sortability(metric, &adj, tol)
}

/// Per-column sample variance.
pub fn var_metric(ds: &Dataset) -> Result<MetricVector> {
    if ds.rows() < 2 {
        return Err(Error::param("data", "variance needs at least 2 rows"));
    }
    let values = (0..ds.cols()).map(|i| stats::sample_variance(&ds.column(i))).collect();
    Ok(MetricVector { values, kind: MetricKind::Var, flags: Vec::new() })
}

/// Per-column R² from an OLS fit (with intercept) on all other columns.
pub fn r2_metric(ds: &Dataset) -> Result<MetricVector> {
    let n = ds.cols();
    if ds.rows() <= n {
        return Err(Error::param(
            "data",
            format!("{} rows cannot support regressions on {} columns", ds.rows(), n),
        ));
    }
    let design = Design::new((0..n).map(|i| ds.column(i)).collect())?;
    let mut values = Vec::with_capacity(n);
    let mut flags = Vec::new();
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        values.push(fit(&design, i, i, &others, &mut flags)?);
    }
    Ok(MetricVector { values, kind: MetricKind::R2, flags })
}

/// Time-series R² excluding every lag of the target process.
pub fn r2star_ts_metric(ds: &Dataset, tau_max: usize) -> Result<MetricVector> {
    ts_metric(ds, tau_max, MetricKind::R2StarTs)
}

/// Time-series R² on the past of the whole system and the present of the
/// other processes.
pub fn r2_ts_metric(ds: &Dataset, tau_max: usize) -> Result<MetricVector> {
    ts_metric(ds, tau_max, MetricKind::R2Ts)
}

fn ts_metric(ds: &Dataset, tau_max: usize, kind: MetricKind) -> Result<MetricVector> {
    if ds.kind() != DataKind::TimeSeries {
        return Err(Error::param("data", "time-series metrics need time-series data"));
    }
    let n = ds.cols();
    let width = n * (tau_max + 1);
    if ds.rows() <= width + tau_max {
        return Err(Error::param(
            "data",
            format!("{} time steps cannot support {width} lagged regressors", ds.rows()),
        ));
    }
    // Column j * (tau_max + 1) + τ holds X_j(t - τ) for t = tau_max..T-1.
    let t_len = ds.rows();
    let data = ds.data();
    let mut columns = Vec::with_capacity(width);
    for j in 0..n {
        for tau in 0..=tau_max {
            columns.push((tau_max..t_len).map(|t| data[(t - tau, j)]).collect());
        }
    }
    let design = Design::new(columns)?;
    let col = |j: usize, tau: usize| j * (tau_max + 1) + tau;
    let mut values = Vec::with_capacity(n);
    let mut flags = Vec::new();
    for i in 0..n {
        let regressors: Vec<usize> = (0..n)
            .flat_map(|j| (0..=tau_max).map(move |tau| (j, tau)))
            .filter(|&(j, tau)| match kind {
                MetricKind::R2StarTs => j != i,
                _ => (j, tau) != (i, 0),
            })
            .map(|(j, tau)| col(j, tau))
            .collect();
        values.push(fit(&design, i, col(i, 0), &regressors, &mut flags)?);
    }
    Ok(MetricVector { values, kind, flags })
}

fn fit(
    design: &Design,
    node: usize,
    target: usize,
    regressors: &[usize],
    flags: &mut Vec<MetricFlag>,
) -> Result<f64> {
    if regressors.is_empty() {
        flags.push(MetricFlag::EmptyRegressors { node });
    }
    let f = design.r2(target, regressors)?;
    if f.ridge {
        flags.push(MetricFlag::Ridge { node });
    }
    Ok(f.r2)
}

//! Monte-Carlo experiments over generated models.
//!
//! Every experiment is split into cells (one per method and edge
//! probability, triple kind, hub size, ...). A cell runs its replicates in
//! parallel; replicate `k` of a cell draws everything from
//! `derive_seed(cell_seed, k)`, and results are collected in index order, so
//! reports do not depend on scheduling. A cell tolerates failed replicates
//! up to 1% of its count and aborts beyond that.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;
use scmgen_core::graph::{gen_er_dag, Dag, TsGraph};
use scmgen_core::rng::{derive_seed, from_seed, SimRng};
use scmgen_core::scm::{gen_fifty_fifty, gen_ipa, gen_iscm, gen_uumc, gen_uvn, CoefRange};
use scmgen_core::simulate::{simulate_static, simulate_svar, standardize_sample, Init};
use scmgen_core::sortability::{pairwise_sortability, r2_metric, r2_ts_metric, var_metric};
use scmgen_core::svar::gen_uumc_svar;
use scmgen_core::{stats, Dataset, Method, Scm, Svar};

use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 25;
pub const SKEWNESS_ESTIMATOR: &str = "adjusted Fisher-Pearson G1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    SortabilityDist(SortabilityDistConfig),
    Triples(TriplesConfig),
    Hub(HubConfig),
    TsPair(TsPairConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortabilityDistConfig {
    pub n: usize,
    pub probs: Vec<f64>,
    pub methods: Vec<String>,
    pub replicates: usize,
    pub samples: usize,
    pub standardize: bool,
    pub coef_low: f64,
    pub coef_high: f64,
    pub tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleKind {
    /// `X0 -> X2 <- X1`, hub `X2`.
    Collider,
    /// `X0 -> X1 -> X2`, hub `X1`.
    Chain,
    /// `X1 <- X0 -> X2`, hub `X0`.
    Confounder,
}

impl TripleKind {
    pub const ALL: [TripleKind; 3] = [TripleKind::Collider, TripleKind::Chain, TripleKind::Confounder];

    pub fn as_str(self) -> &'static str {
        match self {
            TripleKind::Collider => "collider",
            TripleKind::Chain => "chain",
            TripleKind::Confounder => "confounder",
        }
    }

    pub fn edges(self) -> [(usize, usize); 2] {
        match self {
            TripleKind::Collider => [(0, 2), (1, 2)],
            TripleKind::Chain => [(0, 1), (1, 2)],
            TripleKind::Confounder => [(0, 1), (0, 2)],
        }
    }

    pub fn hub(self) -> usize {
        match self {
            TripleKind::Collider => 2,
            TripleKind::Chain => 1,
            TripleKind::Confounder => 0,
        }
    }

    /// Bound on the hub's R²: `1 - ŝ_hub²` for a collider or chain,
    /// `1 - min(ŝ_1², ŝ_2²)` for a confounder.
    pub fn hub_bound(self, scm: &Scm) -> f64 {
        let s2 = |i: usize| scm.noise_std()[i].powi(2);
        match self {
            TripleKind::Confounder => 1.0 - s2(1).min(s2(2)),
            _ => 1.0 - s2(self.hub()),
        }
    }

    fn id(self) -> u64 {
        self as u64
    }
}

impl std::str::FromStr for TripleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TripleKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("kinds: unknown triple kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriplesConfig {
    pub kinds: Vec<TripleKind>,
    pub replicates: usize,
    pub samples: usize,
    /// Fixed standardized coefficients for the two edges instead of UUMC draws.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forced: Option<[f64; 2]>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubConfig {
    pub max_degree: usize,
    pub replicates: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsPairConfig {
    pub replicates: usize,
    pub t_len: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub skewness: f64,
    /// Counts over [`HISTOGRAM_BINS`] equal bins of `[0, 1]`; values outside
    /// are clamped into the end bins.
    pub histogram: Vec<u64>,
    pub skipped: usize,
}

impl Series {
    pub fn new(label: String, values: Vec<f64>, skipped: usize) -> Self {
        Series {
            mean: stats::mean(&values),
            skewness: stats::skewness(&values),
            histogram: stats::histogram(&values, HISTOGRAM_BINS, 0.0, 1.0),
            label,
            values,
            skipped,
        }
    }
}

/// Per-node counts, e.g. how often each node of a triple had the highest R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub label: String,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub replicates: usize,
    pub skewness_estimator: String,
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tallies: Vec<Tally>,
}

impl ExperimentReport {
    pub fn series(&self, label: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label)
    }
}

impl ExperimentConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::SortabilityDist(_) => "sortability-dist",
            ExperimentConfig::Triples(_) => "triples",
            ExperimentConfig::Hub(_) => "hub",
            ExperimentConfig::TsPair(_) => "ts-pair",
        }
    }

    pub fn replicates(&self) -> usize {
        match self {
            ExperimentConfig::SortabilityDist(c) => c.replicates,
            ExperimentConfig::Triples(c) => c.replicates,
            ExperimentConfig::Hub(c) => c.replicates,
            ExperimentConfig::TsPair(c) => c.replicates,
        }
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        if self.replicates() == 0 {
            return Err(Error::Validation("replicates: must be positive".into()));
        }
        let (series, tallies) = match self {
            ExperimentConfig::SortabilityDist(c) => (run_sortability_dist(c)?, Vec::new()),
            ExperimentConfig::Triples(c) => run_triples(c)?,
            ExperimentConfig::Hub(c) => (run_hub(c)?, Vec::new()),
            ExperimentConfig::TsPair(c) => (run_ts_pair(c)?, Vec::new()),
        };
        Ok(ExperimentReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.clone(),
            replicates: self.replicates(),
            skewness_estimator: SKEWNESS_ESTIMATOR.to_string(),
            series,
            tallies,
        })
    }
}

#[derive(Debug)]
struct CellOutput {
    /// `columns[o][k]`: output `o` of the `k`-th successful replicate.
    columns: Vec<Vec<f64>>,
    skipped: usize,
}

/// Runs `replicates` independent draws of `f`, each returning `width`
/// outputs.
fn run_cell<F>(label: &str, cell_seed: u64, replicates: usize, width: usize, f: F) -> Result<CellOutput>
where
    F: Fn(&mut SimRng) -> scmgen_core::Result<Vec<f64>> + Sync,
{
    let results: Vec<scmgen_core::Result<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|k| f(&mut from_seed(derive_seed(cell_seed, k as u64))))
        .collect();
    let budget = replicates / 100;
    let mut columns = vec![Vec::with_capacity(replicates); width];
    let mut skipped = 0;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(v) => {
                for (col, x) in columns.iter_mut().zip(v) {
                    col.push(x);
                }
            }
            Err(e) => {
                skipped += 1;
                first_error.get_or_insert(e);
            }
        }
    }
    if skipped > budget {
        return Err(Error::Generation(format!(
            "{label}: {skipped} of {replicates} replicates failed (budget {budget}); first error: {}",
            first_error.expect("a failure was counted")
        )));
    }
    Ok(CellOutput { columns, skipped })
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::Validation(format!("{name}: must be positive")));
    }
    Ok(())
}

fn run_sortability_dist(c: &SortabilityDistConfig) -> Result<Vec<Series>> {
    positive("n", c.n)?;
    positive("samples", c.samples)?;
    let range = CoefRange::new(c.coef_low, c.coef_high)?;
    let methods: Vec<Method> = c
        .methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(|e| Error::Validation(format!("methods: {e}"))))
        .collect::<Result<_>>()?;
    if methods.is_empty() || c.probs.is_empty() {
        return Err(Error::Validation("methods and probs must be non-empty".into()));
    }
    if let Some(p) = c.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Validation(format!("probs: {p} is not a probability")));
    }
    let mut series = Vec::new();
    for &method in &methods {
        for &p in &c.probs {
            let method_id = Method::ALL.iter().position(|m| *m == method).unwrap_or(0) as u64;
            let cell_seed = derive_seed(derive_seed(c.seed, method_id), p.to_bits());
            let label = format!("{method}/p={p}");
            let out = run_cell(&label, cell_seed, c.replicates, 2, |rng| {
                let dag = gen_er_dag(c.n, p, rng)?;
                let ds = static_data(&dag, method, c.samples, range, rng)?;
                let ds = if c.standardize { standardize_sample(&ds)? } else { ds };
                let var = pairwise_sortability(&var_metric(&ds)?.values, dag.adjacency(), c.tol)?;
                let r2 = pairwise_sortability(&r2_metric(&ds)?.values, dag.adjacency(), c.tol)?;
                Ok(vec![var.score, r2.score])
            })?;
            let [var, r2]: [Vec<f64>; 2] = out.columns.try_into().expect("two outputs");
            series.push(Series::new(format!("{label}/var"), var, out.skipped));
            series.push(Series::new(format!("{label}/r2"), r2, out.skipped));
        }
    }
    Ok(series)
}

/// Draws a model with `method` and returns its data. Sample-coupled methods
/// return the data generated alongside the model.
pub fn static_data(
    dag: &Dag,
    method: Method,
    samples: usize,
    range: CoefRange,
    rng: &mut SimRng,
) -> scmgen_core::Result<Dataset> {
    let scm = match method {
        Method::Uumc => gen_uumc(dag, rng)?,
        Method::Uvn => gen_uvn(dag, range, rng)?,
        Method::Ipa => gen_ipa(dag, range, rng)?,
        Method::FiftyFifty => return Ok(gen_fifty_fifty(dag, samples, range, rng)?.1),
        Method::Iscm => return Ok(gen_iscm(dag, samples, range, rng)?.1),
    };
    simulate_static(&scm, samples, rng)
}

fn forced_scm(kind: TripleKind, coef: [f64; 2]) -> scmgen_core::Result<Scm> {
    let mut w = DMatrix::zeros(3, 3);
    for ((j, i), a) in kind.edges().into_iter().zip(coef) {
        w[(j, i)] = a;
    }
    Scm::from_standardized_weights(w)
}

fn run_triples(c: &TriplesConfig) -> Result<(Vec<Series>, Vec<Tally>)> {
    positive("samples", c.samples)?;
    if c.samples < 4 {
        return Err(Error::Validation("samples: R² on three columns needs at least 4 samples".into()));
    }
    let mut series = Vec::new();
    let mut tallies = Vec::new();
    for &kind in &c.kinds {
        let dag = Dag::from_edges(3, &kind.edges())?;
        if let Some(coef) = c.forced {
            forced_scm(kind, coef).map_err(|e| Error::Validation(format!("forced: {e}")))?;
        }
        let out = run_cell(kind.as_str(), derive_seed(c.seed, kind.id()), c.replicates, 4, |rng| {
            let scm = match c.forced {
                Some(coef) => forced_scm(kind, coef)?,
                None => gen_uumc(&dag, rng)?,
            };
            let ds = simulate_static(&scm, c.samples, rng)?;
            let mut v = r2_metric(&ds)?.values;
            v.push(kind.hub_bound(&scm));
            Ok(v)
        })?;
        let mut highest = vec![0; 3];
        let mut lowest = vec![0; 3];
        for k in 0..out.columns[0].len() {
            let r: Vec<f64> = (0..3).map(|i| out.columns[i][k]).collect();
            highest[argmax(&r)] += 1;
            lowest[argmax(&r.iter().map(|x| -x).collect::<Vec<_>>())] += 1;
        }
        for (i, values) in out.columns.into_iter().enumerate() {
            let name = if i < 3 { format!("X{i}") } else { "hub_bound".to_string() };
            series.push(Series::new(format!("{}/{name}", kind.as_str()), values, out.skipped));
        }
        tallies.push(Tally { label: format!("{}/highest", kind.as_str()), counts: highest });
        tallies.push(Tally { label: format!("{}/lowest", kind.as_str()), counts: lowest });
    }
    Ok((series, tallies))
}

fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// Star graphs with `k` leaves: a collider (`k` parents of hub `k`) or a
/// confounder (hub `0` with `k` children).
pub fn hub_graph(collider: bool, k: usize) -> scmgen_core::Result<(Dag, usize)> {
    if collider {
        let edges: Vec<(usize, usize)> = (0..k).map(|j| (j, k)).collect();
        Ok((Dag::from_edges(k + 1, &edges)?, k))
    } else {
        let edges: Vec<(usize, usize)> = (1..=k).map(|i| (0, i)).collect();
        Ok((Dag::from_edges(k + 1, &edges)?, 0))
    }
}

fn run_hub(c: &HubConfig) -> Result<Vec<Series>> {
    positive("max_degree", c.max_degree)?;
    positive("samples", c.samples)?;
    let mut series = Vec::new();
    for (orientation, collider) in [(0u64, false), (1u64, true)] {
        for k in 1..=c.max_degree {
            let (dag, hub) = hub_graph(collider, k)?;
            let name = if collider { "collider" } else { "confounder" };
            let label = format!("{name}/k={k}");
            if c.samples <= k + 1 {
                return Err(Error::Validation(format!("samples: too few for {k}-leaf hubs")));
            }
            let cell_seed = derive_seed(derive_seed(c.seed, orientation), k as u64);
            let out = run_cell(&label, cell_seed, c.replicates, 1, |rng| {
                let scm = gen_uumc(&dag, rng)?;
                let ds = simulate_static(&scm, c.samples, rng)?;
                Ok(vec![r2_metric(&ds)?.values[hub]])
            })?;
            let values = out.columns.into_iter().next().expect("one output");
            series.push(Series::new(label, values, out.skipped));
        }
    }
    Ok(series)
}

/// `X0(t-1) -> X0(t) -> X1(t)`, `X1(t-1) -> X1(t)`.
pub fn ts_pair_graph() -> TsGraph {
    TsGraph::from_edges(2, 1, &[(0, 0, 1), (1, 1, 1), (0, 1, 0)]).expect("fixed graph is valid")
}

fn run_ts_pair(c: &TsPairConfig) -> Result<Vec<Series>> {
    if c.t_len < 10 {
        return Err(Error::Validation("t_len: need at least 10 time steps".into()));
    }
    let g = ts_pair_graph();
    let out = run_cell("ts-pair", c.seed, c.replicates, 2, |rng| {
        let model = gen_uumc_svar(&g, rng)?;
        let ds = simulate_svar(&model, c.t_len, rng, Init::Stationary)?;
        Ok(r2_ts_metric(&ds, 1)?.values)
    })?;
    let [source, target]: [Vec<f64>; 2] = out.columns.try_into().expect("two outputs");
    Ok(vec![
        Series::new("source".into(), source, out.skipped),
        Series::new("target".into(), target, out.skipped),
    ])
}

/// Five-process lag-1 chain `X_i(t-1) -> X_{i+1}(t)` whose self-lags decay
/// along the chain. Its variance and time-series R² mostly fall along the
/// chain while R² without own lags mostly rises, so the two R² flavours
/// land on opposite sides of 1/2.
pub fn opposing_svar() -> Svar {
    let self_lag = [0.95, 0.7, 0.5, 0.3, 0.1];
    let cross = [0.25, 0.5, 0.6, 0.7];
    let mut lag1 = DMatrix::zeros(5, 5);
    for (i, b) in self_lag.into_iter().enumerate() {
        lag1[(i, i)] = b;
    }
    for (i, c) in cross.into_iter().enumerate() {
        lag1[(i, i + 1)] = c;
    }
    Svar::from_parts(vec![DMatrix::zeros(5, 5), lag1], vec![1.0; 5], 1.0).expect("fixed model is stable")
}

/// Summary-graph edges of [`opposing_svar`].
pub fn opposing_graph() -> TsGraph {
    let mut edges: Vec<(usize, usize, usize)> = (0..5).map(|i| (i, i, 1)).collect();
    edges.extend((0..4).map(|i| (i, i + 1, 1)));
    TsGraph::from_edges(5, 1, &edges).expect("fixed graph is valid")
}

/// Reads a config either bare or echoed inside a report.
pub fn config_from_json(value: serde_json::Value) -> std::result::Result<ExperimentConfig, serde_json::Error> {
    match value.get("config") {
        Some(inner) => serde_json::from_value(inner.clone()),
        None => serde_json::from_value(value),
    }
}

//! JSON model files and CSV datasets.
//!
//! Weight matrices are written row-major with entry `[j][i]` the effect of
//! `X_j` on `X_i`; lagged tensors are nested `[τ][j][i]`. CSV files carry a
//! header `X0,...,X{n-1}` and one row per sample or time step, with floats in
//! their shortest round-trip form.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use scmgen_core::sortability::{MetricFlag, MetricVector, SortabilityResult};
use scmgen_core::{DataKind, Dag, Dataset, Method, Scm, Svar, TsGraph};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsGraphJson {
    pub n: usize,
    pub tau_max: usize,
    pub lagged_edges: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphFile {
    Static(Dag),
    TimeSeries(TsGraph),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGraph {
    TimeSeries(TsGraphJson),
    Static(DagJson),
}

impl From<&Dag> for DagJson {
    fn from(dag: &Dag) -> Self {
        DagJson { n: dag.n(), edges: dag.edges().into_iter().map(|(j, i)| [j, i]).collect() }
    }
}

impl From<&TsGraph> for TsGraphJson {
    fn from(g: &TsGraph) -> Self {
        TsGraphJson {
            n: g.n(),
            tau_max: g.tau_max(),
            lagged_edges: g.lagged_edges().into_iter().map(|(j, i, t)| [j, i, t]).collect(),
        }
    }
}

impl DagJson {
    pub fn to_dag(&self) -> scmgen_core::Result<Dag> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        Dag::from_edges(self.n, &edges)
    }
}

impl TsGraphJson {
    pub fn to_graph(&self) -> scmgen_core::Result<TsGraph> {
        let edges: Vec<(usize, usize, usize)> = self.lagged_edges.iter().map(|e| (e[0], e[1], e[2])).collect();
        TsGraph::from_edges(self.n, self.tau_max, &edges)
    }
}

pub fn read_graph(path: &Path) -> Result<GraphFile> {
    match read_json::<RawGraph>(path)? {
        RawGraph::TimeSeries(g) => Ok(GraphFile::TimeSeries(g.to_graph().map_err(|e| Error::parse(path, e))?)),
        RawGraph::Static(g) => Ok(GraphFile::Static(g.to_dag().map_err(|e| Error::parse(path, e))?)),
    }
}

pub fn read_dag(path: &Path) -> Result<Dag> {
    match read_graph(path)? {
        GraphFile::Static(d) => Ok(d),
        GraphFile::TimeSeries(_) => Err(Error::parse(path, "expected a static graph, found a time-series graph")),
    }
}

pub fn read_ts_graph(path: &Path) -> Result<TsGraph> {
    match read_graph(path)? {
        GraphFile::TimeSeries(g) => Ok(g),
        GraphFile::Static(_) => Err(Error::parse(path, "expected a time-series graph, found a static graph")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef_high: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmJson {
    pub n: usize,
    pub method: String,
    pub weights: Vec<Vec<f64>>,
    pub noise_std: Vec<f64>,
    pub noise_mean: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<Vec<Vec<f64>>>,
    pub params: ScmParams,
}

impl ScmJson {
    pub fn new(scm: &Scm, params: ScmParams) -> Self {
        ScmJson {
            n: scm.n(),
            method: scm.method().to_string(),
            weights: rows(scm.weights()),
            noise_std: scm.noise_std().to_vec(),
            noise_mean: scm.noise_mean().to_vec(),
            corr: scm.corr().map(rows),
            params,
        }
    }

    pub fn to_scm(&self) -> scmgen_core::Result<Scm> {
        let method: Method = self.method.parse()?;
        let weights = matrix(self.n, &self.weights)?;
        let corr = self.corr.as_ref().map(|c| matrix(self.n, c)).transpose()?;
        Scm::new(weights, self.noise_std.clone(), self.noise_mean.clone(), corr, method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvarJson {
    pub n: usize,
    pub tau_max: usize,
    pub delta: f64,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub noise_std: Vec<f64>,
    pub lagged_corr: Vec<Vec<Vec<f64>>>,
    pub spectral_radius: f64,
    pub seed: u64,
}

impl SvarJson {
    pub fn new(model: &Svar, seed: u64) -> Self {
        SvarJson {
            n: model.n(),
            tau_max: model.tau_max(),
            delta: model.delta(),
            weights: model.weights().iter().map(rows).collect(),
            noise_std: model.noise_std().to_vec(),
            lagged_corr: model.lagged_corr().iter().map(rows).collect(),
            spectral_radius: model.spectral_radius(),
            seed,
        }
    }

    /// Rebuilds the model; stationary moments are recomputed from the
    /// coefficients.
    pub fn to_svar(&self) -> scmgen_core::Result<Svar> {
        if self.weights.len() != self.tau_max + 1 {
            return Err(scmgen_core::Error::Shape(format!(
                "{} weight slices for tau_max {}",
                self.weights.len(),
                self.tau_max
            )));
        }
        let weights = self.weights.iter().map(|w| matrix(self.n, w)).collect::<scmgen_core::Result<_>>()?;
        Svar::from_parts(weights, self.noise_std.clone(), self.delta)
    }
}

/// Either model file, told apart by the presence of `tau_max`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Static(ScmJson),
    TimeSeries(SvarJson),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawModel {
    TimeSeries(SvarJson),
    Static(ScmJson),
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    Ok(match read_json::<RawModel>(path)? {
        RawModel::TimeSeries(m) => ModelFile::TimeSeries(m),
        RawModel::Static(m) => ModelFile::Static(m),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortabilityReport {
    pub metric: String,
    pub values: Vec<f64>,
    pub score: f64,
    pub n_pairs: usize,
    pub n_correct: f64,
    pub tol: f64,
    pub flags: Vec<String>,
}

impl SortabilityReport {
    pub fn new(metric: &MetricVector, result: &SortabilityResult) -> Self {
        SortabilityReport {
            metric: metric.kind.to_string(),
            values: metric.values.clone(),
            score: result.score,
            n_pairs: result.n_pairs,
            n_correct: result.n_correct,
            tol: result.tol,
            flags: metric.flags.iter().map(flag_label).collect(),
        }
    }
}

pub fn flag_label(flag: &MetricFlag) -> String {
    match flag {
        MetricFlag::Ridge { node } => format!("ridge:{node}"),
        MetricFlag::EmptyRegressors { node } => format!("empty_regressors:{node}"),
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn matrix(n: usize, rows: &[Vec<f64>]) -> scmgen_core::Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(scmgen_core::Error::Shape(format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

/// Pretty-printed JSON with a trailing newline; parent directories are
/// created as needed.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_csv(path: &Path, ds: &Dataset) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record((0..ds.cols()).map(|i| format!("X{i}"))).map_err(|e| csv_error(path, e))?;
    let data = ds.data();
    for r in 0..ds.rows() {
        w.write_record((0..ds.cols()).map(|c| data[(r, c)].to_string())).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a dataset written by [`write_csv`].
pub fn read_csv(path: &Path, kind: DataKind, tau_max: Option<usize>) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    for (i, name) in header.iter().enumerate() {
        if name != format!("X{i}") {
            return Err(Error::parse(path, format!("column {i} is named `{name}`, expected `X{i}`")));
        }
    }
    let n = header.len();
    let mut values = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        for (col, field) in record.iter().enumerate() {
            let x: f64 = field
                .parse()
                .map_err(|_| Error::parse(path, format!("row {row}, column {col}: `{field}` is not a number")))?;
            values.push(x);
        }
    }
    if n == 0 || values.is_empty() {
        return Err(Error::parse(path, "dataset is empty"));
    }
    let rows = values.len() / n;
    let data = DMatrix::from_row_slice(rows, n, &values);
    Dataset::new(data, kind, tau_max).map_err(|e| Error::parse(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::parse(path, e)
    }
}

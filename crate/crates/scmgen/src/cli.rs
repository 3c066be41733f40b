//! Command-line interface.
//!
//! Outputs default to `$SCMGEN_OUT_DIR/<name>` (or the working directory)
//! when `--out` is not given.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use scmgen_core::graph::{gen_er_dag, gen_er_ts_graph, support};
use scmgen_core::rng::from_seed;
use scmgen_core::scm::{gen_fifty_fifty, gen_ipa, gen_iscm, gen_uumc, gen_uvn, CoefRange};
use scmgen_core::simulate::{simulate_static, simulate_svar, standardize_sample, Init};
use scmgen_core::sortability::{
    pairwise_sortability, r2_metric, r2_ts_metric, r2star_ts_metric, ts_sortability, var_metric, DEFAULT_TOL,
};
use scmgen_core::svar::gen_uumc_svar;
use scmgen_core::{DataKind, Dataset, MetricKind, Method};

use crate::error::{Error, Result};
use crate::experiment::{
    config_from_json, ExperimentConfig, HubConfig, SortabilityDistConfig, TriplesConfig, TripleKind, TsPairConfig,
};
use crate::io::{self, DagJson, GraphFile, ModelFile, ScmJson, ScmParams, SortabilityReport, SvarJson, TsGraphJson};

#[derive(Debug, Parser)]
#[command(name = "scmgen", version, about = "Generate, simulate and score linear structural causal models")]
pub struct Cli {
    /// Directory for outputs written without an explicit `--out`.
    #[arg(long, global = true, env = "SCMGEN_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw an Erdős–Rényi DAG, or a time-series graph with `--tau-max`.
    GenGraph(GenGraphArgs),
    /// Draw a static linear SCM on a DAG.
    GenScm(GenScmArgs),
    /// Draw a stationary unit-variance SVAR on a time-series graph.
    GenSvar(GenSvarArgs),
    /// Simulate data from a model file.
    Simulate(SimulateArgs),
    /// Score a dataset against a graph.
    Sortability(SortabilityArgs),
    /// Run a Monte-Carlo experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct GenGraphArgs {
    #[arg(long)]
    pub nodes: usize,
    /// Edge probability of a static DAG.
    #[arg(long, required_unless_present = "tau_max", conflicts_with_all = ["tau_max", "p_cross", "p_auto"])]
    pub edge_prob: Option<f64>,
    /// Largest lag; makes the graph a time-series graph.
    #[arg(long, requires_all = ["p_cross", "p_auto"])]
    pub tau_max: Option<usize>,
    /// Probability of each cross edge slot.
    #[arg(long)]
    pub p_cross: Option<f64>,
    /// Probability of each self-lag slot.
    #[arg(long)]
    pub p_auto: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Uumc,
    Uvn,
    Ipa,
    FiftyFifty,
    Iscm,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Uumc => Method::Uumc,
            MethodArg::Uvn => Method::Uvn,
            MethodArg::Ipa => Method::Ipa,
            MethodArg::FiftyFifty => Method::FiftyFifty,
            MethodArg::Iscm => Method::Iscm,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenScmArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long)]
    pub seed: u64,
    /// Lower bound of coefficient magnitudes for the baselines.
    #[arg(long, default_value_t = 0.5)]
    pub coef_low: f64,
    #[arg(long, default_value_t = 2.0)]
    pub coef_high: f64,
    /// Sample size; required by the sample-coupled methods.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Where the sample-coupled methods write their data.
    #[arg(long)]
    pub emit_data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenSvarArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Graph the model must be consistent with.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    /// Sample size for static models.
    #[arg(long, conflicts_with = "t_len")]
    pub samples: Option<usize>,
    /// Series length for SVAR models.
    #[arg(long)]
    pub t_len: Option<usize>,
    /// `stationary` or `burn-in`.
    #[arg(long, default_value = "stationary")]
    pub init: InitArg,
    /// Steps discarded with `--init burn-in`.
    #[arg(long, default_value_t = 1000)]
    pub burn_in: usize,
    /// Rescale every column to zero mean and unit sample std.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Stationary,
    BurnIn,
}

#[derive(Debug, Args)]
pub struct SortabilityArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// `var`, `r2`, `r2star` or `r2ts`.
    #[arg(long)]
    pub metric: String,
    /// Lag window of the time-series metrics.
    #[arg(long)]
    pub tau_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct ExperimentArgs {
    /// Re-run the config stored in a report or bare config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub kind: Option<ExperimentKind>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentKind {
    /// Var- and R²-sortability over ER graphs per method and edge probability.
    SortabilityDist {
        #[arg(long, default_value_t = 20)]
        nodes: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.3, 0.5])]
        probs: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = ["uumc".to_string(), "iscm".to_string()])]
        methods: Vec<String>,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        standardize: bool,
        #[arg(long, default_value_t = 0.5)]
        coef_low: f64,
        #[arg(long, default_value_t = 2.0)]
        coef_high: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// R² per node of colliders, chains and confounders.
    Triples {
        #[arg(long, value_delimiter = ',', default_values_t = ["collider".to_string(), "chain".to_string(), "confounder".to_string()])]
        kinds: Vec<String>,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Two standardized edge coefficients used instead of UUMC draws.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        forced: Option<Vec<f64>>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hub R² against the number of leaves.
    Hub {
        #[arg(long, default_value_t = 5)]
        max_degree: usize,
        #[arg(long, default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// R²-sortability of a two-process SVAR.
    TsPair {
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 1000)]
        t_len: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    let out_dir = cli.out_dir.unwrap_or_else(|| PathBuf::from("."));
    match cli.command {
        Command::GenGraph(a) => gen_graph(a, &out_dir),
        Command::GenScm(a) => gen_scm(a, &out_dir),
        Command::GenSvar(a) => gen_svar(a, &out_dir),
        Command::Simulate(a) => simulate(a, &out_dir),
        Command::Sortability(a) => sortability(a),
        Command::Experiment(a) => experiment(a, &out_dir),
    }
}

fn out_path(out: Option<PathBuf>, dir: &Path, default: &str) -> PathBuf {
    out.unwrap_or_else(|| dir.join(default))
}

fn gen_graph(a: GenGraphArgs, dir: &Path) -> Result<()> {
    let mut rng = from_seed(a.seed);
    let path = out_path(a.out, dir, "graph.json");
    match (a.edge_prob, a.tau_max) {
        (Some(p), None) => {
            let dag = gen_er_dag(a.nodes, p, &mut rng)?;
            io::write_json(&path, &DagJson::from(&dag))?;
            println!("wrote DAG with {} nodes and {} edges to {}", dag.n(), dag.edge_count(), path.display());
        }
        (None, Some(tau)) => {
            let (pc, pa) = (a.p_cross.unwrap_or_default(), a.p_auto.unwrap_or_default());
            let g = gen_er_ts_graph(a.nodes, pc, pa, tau, &mut rng)?;
            io::write_json(&path, &TsGraphJson::from(&g))?;
            println!(
                "wrote time-series graph with {} nodes and {} lagged edges to {}",
                g.n(),
                g.lagged_edges().len(),
                path.display()
            );
        }
        _ => return Err(Error::Validation("give either --edge-prob or --tau-max".into())),
    }
    Ok(())
}

fn gen_scm(a: GenScmArgs, dir: &Path) -> Result<()> {
    let dag = io::read_dag(&a.graph)?;
    let method = Method::from(a.method);
    let range = CoefRange::new(a.coef_low, a.coef_high)?;
    let mut rng = from_seed(a.seed);
    let (scm, data) = if method.is_sample_coupled() {
        let samples = a
            .samples
            .ok_or_else(|| Error::Validation(format!("--samples is required for method {method}")))?;
        if a.emit_data.is_none() {
            return Err(Error::Validation(format!(
                "--emit-data is required for method {method}: its model is fitted to the generated sample"
            )));
        }
        let (scm, ds) = match method {
            Method::FiftyFifty => gen_fifty_fifty(&dag, samples, range, &mut rng)?,
            _ => gen_iscm(&dag, samples, range, &mut rng)?,
        };
        (scm, Some(ds))
    } else {
        let scm = match method {
            Method::Uumc => gen_uumc(&dag, &mut rng)?,
            Method::Uvn => gen_uvn(&dag, range, &mut rng)?,
            _ => gen_ipa(&dag, range, &mut rng)?,
        };
        (scm, None)
    };
    let baseline = method != Method::Uumc;
    let params = ScmParams {
        coef_low: baseline.then_some(a.coef_low),
        coef_high: baseline.then_some(a.coef_high),
        seed: a.seed,
    };
    let path = out_path(a.out, dir, "scm.json");
    io::write_json(&path, &ScmJson::new(&scm, params))?;
    println!("wrote {method} model with {} nodes to {}", scm.n(), path.display());
    if let (Some(ds), Some(data_path)) = (data, a.emit_data) {
        io::write_csv(&data_path, &ds)?;
        println!("wrote {} samples to {}", ds.rows(), data_path.display());
    }
    Ok(())
}

fn gen_svar(a: GenSvarArgs, dir: &Path) -> Result<()> {
    let g = io::read_ts_graph(&a.graph)?;
    let model = gen_uumc_svar(&g, &mut from_seed(a.seed))?;
    let path = out_path(a.out, dir, "svar.json");
    io::write_json(&path, &SvarJson::new(&model, a.seed))?;
    println!(
        "wrote SVAR with {} processes, tau_max {}, spectral radius {:.4} to {}",
        model.n(),
        model.tau_max(),
        model.spectral_radius(),
        path.display()
    );
    Ok(())
}

fn check_support(model: &scmgen_core::Adjacency, graph: &scmgen_core::Adjacency, what: &str) -> Result<()> {
    if model.shape() != graph.shape() {
        return Err(Error::Validation(format!("{what}: model and graph have different sizes")));
    }
    for j in 0..model.nrows() {
        for i in 0..model.ncols() {
            if model[(j, i)] && !graph[(j, i)] {
                return Err(Error::Validation(format!("{what}: model has edge {j} -> {i} missing from the graph")));
            }
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs, dir: &Path) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let graph = a.graph.as_deref().map(io::read_graph).transpose()?;
    let mut rng = from_seed(a.seed);
    let ds = match model {
        ModelFile::Static(m) => {
            let scm = m.to_scm().map_err(|e| Error::parse(&a.model, e))?;
            if scm.method().is_sample_coupled() {
                return Err(Error::Validation(format!(
                    "method {} is fitted to its own sample; use the data from gen-scm --emit-data",
                    scm.method()
                )));
            }
            match graph {
                Some(GraphFile::Static(dag)) => check_support(&support(scm.weights()), dag.adjacency(), "graph")?,
                Some(GraphFile::TimeSeries(_)) => {
                    return Err(Error::Validation("graph: static model given a time-series graph".into()))
                }
                None => {}
            }
            let m = a.samples.ok_or_else(|| Error::Validation("--samples is required for static models".into()))?;
            simulate_static(&scm, m, &mut rng)?
        }
        ModelFile::TimeSeries(m) => {
            let svar = m.to_svar().map_err(|e| Error::parse(&a.model, e))?;
            match graph {
                Some(GraphFile::TimeSeries(g)) => {
                    if g.tau_max() != svar.tau_max() {
                        return Err(Error::Validation("graph: tau_max differs from the model".into()));
                    }
                    for (tau, w) in svar.weights().iter().enumerate() {
                        check_support(&support(w), g.slice(tau), &format!("graph lag {tau}"))?;
                    }
                }
                Some(GraphFile::Static(_)) => {
                    return Err(Error::Validation("graph: SVAR model given a static graph".into()))
                }
                None => {}
            }
            let t = a.t_len.ok_or_else(|| Error::Validation("--t-len is required for SVAR models".into()))?;
            let init = match a.init {
                InitArg::Stationary => Init::Stationary,
                InitArg::BurnIn => Init::BurnIn(a.burn_in),
            };
            simulate_svar(&svar, t, &mut rng, init)?
        }
    };
    let ds = if a.standardize { standardize_sample(&ds)? } else { ds };
    let path = out_path(a.out, dir, "data.csv");
    io::write_csv(&path, &ds)?;
    println!("wrote {} rows of {} columns to {}", ds.rows(), ds.cols(), path.display());
    Ok(())
}

fn sortability(a: SortabilityArgs) -> Result<()> {
    let kind: MetricKind = a.metric.parse().map_err(|e| Error::Validation(format!("--metric: {e}")))?;
    let tau_max = if kind.is_time_series() {
        Some(a.tau_max.ok_or_else(|| Error::Validation(format!("--tau-max is required for metric {kind}")))?)
    } else {
        a.tau_max
    };
    let graph = io::read_graph(&a.graph)?;
    let data_kind = match graph {
        GraphFile::Static(_) => DataKind::Static,
        GraphFile::TimeSeries(_) => DataKind::TimeSeries,
    };
    let ds: Dataset = io::read_csv(&a.data, data_kind, tau_max)?;
    let n = match &graph {
        GraphFile::Static(d) => d.n(),
        GraphFile::TimeSeries(g) => g.n(),
    };
    if ds.cols() != n {
        return Err(Error::Validation(format!("data has {} columns but the graph has {n} nodes", ds.cols())));
    }
    let metric = match kind {
        MetricKind::Var => var_metric(&ds)?,
        MetricKind::R2 => r2_metric(&ds)?,
        MetricKind::R2StarTs => r2star_ts_metric(&ds, tau_max.unwrap_or_default())?,
        MetricKind::R2Ts => r2_ts_metric(&ds, tau_max.unwrap_or_default())?,
    };
    let result = match &graph {
        GraphFile::Static(d) => pairwise_sortability(&metric.values, d.adjacency(), a.tol)?,
        GraphFile::TimeSeries(g) => ts_sortability(&metric.values, g, a.tol)?,
    };
    let report = SortabilityReport::new(&metric, &result);
    match a.out {
        Some(path) => {
            io::write_json(&path, &report)?;
            println!("{kind}-sortability {:.4} over {} pairs, written to {}", report.score, report.n_pairs, path.display());
        }
        None => {
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{text}");
        }
    }
    Ok(())
}

fn experiment(a: ExperimentArgs, dir: &Path) -> Result<()> {
    let (config, out) = match (a.config, a.kind) {
        (Some(path), None) => {
            let value: serde_json::Value = io::read_json(&path)?;
            (config_from_json(value).map_err(|e| Error::parse(&path, e))?, a.out)
        }
        (None, Some(kind)) => experiment_config(kind)?,
        _ => return Err(Error::Validation("give an experiment subcommand or --config".into())),
    };
    let report = config.run()?;
    let path = out_path(out, dir, &format!("{}.json", config.name()));
    io::write_json(&path, &report)?;
    println!("wrote {} report with {} series to {}", config.name(), report.series.len(), path.display());
    for s in &report.series {
        println!("  {:<28} mean {:.4}  skewness {:+.4}  n {}", s.label, s.mean, s.skewness, s.values.len());
    }
    Ok(())
}

fn experiment_config(kind: ExperimentKind) -> Result<(ExperimentConfig, Option<PathBuf>)> {
    Ok(match kind {
        ExperimentKind::SortabilityDist {
            nodes,
            probs,
            methods,
            replicates,
            samples,
            standardize,
            coef_low,
            coef_high,
            tol,
            seed,
            out,
        } => (
            ExperimentConfig::SortabilityDist(SortabilityDistConfig {
                n: nodes,
                probs,
                methods,
                replicates,
                samples,
                standardize,
                coef_low,
                coef_high,
                tol,
                seed,
            }),
            out,
        ),
        ExperimentKind::Triples { kinds, replicates, samples, forced, seed, out } => {
            let kinds = kinds.iter().map(|k| k.parse::<TripleKind>()).collect::<Result<_>>()?;
            let forced = forced.map(|f| [f[0], f[1]]);
            (ExperimentConfig::Triples(TriplesConfig { kinds, replicates, samples, forced, seed }), out)
        }
        ExperimentKind::Hub { max_degree, replicates, samples, seed, out } => {
            (ExperimentConfig::Hub(HubConfig { max_degree, replicates, samples, seed }), out)
        }
        ExperimentKind::TsPair { replicates, t_len, seed, out } => {
            (ExperimentConfig::TsPair(TsPairConfig { replicates, t_len, seed }), out)
        }
    })
}

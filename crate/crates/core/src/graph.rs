//! Static DAGs and lagged time-series graphs.
//!
//! Adjacency entry `(j, i)` is `true` for an edge `X_j -> X_i`. Index order
//! is a topological order of every contemporaneous slice, so a valid
//! adjacency is strictly upper triangular there.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Bernoulli, Distribution};

use crate::error::{Error, Result};

pub type Adjacency = DMatrix<bool>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dag {
    adj: Adjacency,
}

impl Dag {
    pub fn new(adj: Adjacency) -> Result<Self> {
        if !adj.is_square() {
            return Err(Error::Shape(format!("adjacency is {}x{}", adj.nrows(), adj.ncols())));
        }
        if adj.nrows() == 0 {
            return Err(Error::param("n", "graph needs at least one node"));
        }
        check_upper_triangular(&adj)?;
        Ok(Dag { adj })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Dag::new(DMatrix::from_element(n, n, false))
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = DMatrix::from_element(n, n, false);
        for &(j, i) in edges {
            if j >= n || i >= n {
                return Err(Error::Structure(format!("edge {j} -> {i} out of range for n={n}")));
            }
            adj[(j, i)] = true;
        }
        Dag::new(adj)
    }

    pub fn n(&self) -> usize {
        self.adj.nrows()
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adj
    }

    pub fn has_edge(&self, j: usize, i: usize) -> bool {
        self.adj[(j, i)]
    }

    /// Parents of `i` in increasing index order.
    pub fn parents(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..i).filter(move |&j| self.adj[(j, i)])
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.parents(i).count()
    }

    /// Edges `(j, i)` sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if self.adj[(j, i)] {
                    out.push((j, i));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }
}

/// Lagged causal graph: `adj[tau][(j, i)]` means `X_j(t - tau) -> X_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TsGraph {
    n: usize,
    adj: Vec<Adjacency>,
}

impl TsGraph {
    pub fn new(adj: Vec<Adjacency>) -> Result<Self> {
        let Some(first) = adj.first() else {
            return Err(Error::Shape("time-series graph needs at least the lag-0 slice".into()));
        };
        let n = first.nrows();
        if n == 0 {
            return Err(Error::param("n", "graph needs at least one node"));
        }
        for (tau, slice) in adj.iter().enumerate() {
            if slice.nrows() != n || slice.ncols() != n {
                return Err(Error::Shape(format!(
                    "lag {tau} slice is {}x{}, expected {n}x{n}",
                    slice.nrows(),
                    slice.ncols()
                )));
            }
        }
        check_upper_triangular(first)?;
        Ok(TsGraph { n, adj })
    }

    pub fn empty(n: usize, tau_max: usize) -> Result<Self> {
        TsGraph::new(alloc::vec![DMatrix::from_element(n, n, false); tau_max + 1])
    }

    pub fn from_edges(n: usize, tau_max: usize, edges: &[(usize, usize, usize)]) -> Result<Self> {
        let mut adj = alloc::vec![DMatrix::from_element(n, n, false); tau_max + 1];
        for &(j, i, tau) in edges {
            if j >= n || i >= n || tau > tau_max {
                return Err(Error::Structure(format!(
                    "edge {j} -> {i} at lag {tau} out of range (n={n}, tau_max={tau_max})"
                )));
            }
            adj[tau][(j, i)] = true;
        }
        TsGraph::new(adj)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau_max(&self) -> usize {
        self.adj.len() - 1
    }

    pub fn slice(&self, tau: usize) -> &Adjacency {
        &self.adj[tau]
    }

    pub fn has_edge(&self, j: usize, i: usize, tau: usize) -> bool {
        self.adj[tau][(j, i)]
    }

    /// Edges `(j, i, tau)` sorted lexicographically.
    pub fn lagged_edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.n {
            for i in 0..self.n {
                for (tau, slice) in self.adj.iter().enumerate() {
                    if slice[(j, i)] {
                        out.push((j, i, tau));
                    }
                }
            }
        }
        out
    }
}

fn check_upper_triangular(adj: &Adjacency) -> Result<()> {
    let n = adj.nrows();
    for j in 0..n {
        for i in 0..=j {
            if adj[(j, i)] {
                return Err(Error::Structure(format!(
                    "edge {j} -> {i} violates topological index order"
                )));
            }
        }
    }
    Ok(())
}

fn bernoulli(name: &'static str, p: f64) -> Result<Bernoulli> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(name, format!("probability {p} not in [0, 1]")));
    }
    Bernoulli::new(p).map_err(|_| Error::param(name, "invalid probability"))
}

/// Erdős–Rényi DAG: every pair `j < i` carries `j -> i` independently with
/// probability `p`. Draws are taken row-major over `(j, i)`.
pub fn gen_er_dag<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Dag> {
    if n == 0 {
        return Err(Error::param("n", "graph needs at least one node"));
    }
    let coin = bernoulli("p", p)?;
    let mut adj = DMatrix::from_element(n, n, false);
    for j in 0..n {
        for i in j + 1..n {
            adj[(j, i)] = coin.sample(rng);
        }
    }
    Dag::new(adj)
}

/// Erdős–Rényi time-series graph.
///
/// Cross edges `j != i` appear at every lag with probability `p_cross`
/// (lag 0 only for `j < i`); self edges `i -> i` appear at every lag
/// `tau >= 1` with probability `p_auto`. Draws are row-major over
/// `(j, i, tau)`, skipping forbidden slots.
pub fn gen_er_ts_graph<R: Rng + ?Sized>(
    n: usize,
    p_cross: f64,
    p_auto: f64,
    tau_max: usize,
    rng: &mut R,
) -> Result<TsGraph> {
    if n == 0 {
        return Err(Error::param("n", "graph needs at least one node"));
    }
    let cross = bernoulli("p_cross", p_cross)?;
    let auto = bernoulli("p_auto", p_auto)?;
    let mut adj = alloc::vec![DMatrix::from_element(n, n, false); tau_max + 1];
    for j in 0..n {
        for i in 0..n {
            for (tau, slice) in adj.iter_mut().enumerate() {
                let allowed = if j == i { tau >= 1 } else { tau >= 1 || j < i };
                if !allowed {
                    continue;
                }
                let coin = if j == i { &auto } else { &cross };
                slice[(j, i)] = coin.sample(rng);
            }
        }
    }
    TsGraph::new(adj)
}

/// Collapse lags: `(j, i)` is set iff `j -> i` at some lag. The result may
/// contain 2-cycles and self-loops.
pub fn summary_graph(g: &TsGraph) -> Adjacency {
    let mut out = DMatrix::from_element(g.n, g.n, false);
    for slice in &g.adj {
        out.zip_apply(slice, |o, e| *o = *o || e);
    }
    out
}

/// Boolean support of a weighted matrix (`w != 0`).
pub fn support(w: &DMatrix<f64>) -> Adjacency {
    w.map(|x| x != 0.0)
}

pub(crate) fn bool_matmul(a: &Adjacency, b: &Adjacency) -> Adjacency {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = DMatrix::from_element(n, m, false);
    for r in 0..n {
        for k in 0..a.ncols() {
            if !a[(r, k)] {
                continue;
            }
            for c in 0..m {
                if b[(k, c)] {
                    out[(r, c)] = true;
                }
            }
        }
    }
    out
}

/// `(j, i)` is set iff a directed path `j -> ... -> i` of length >= 1
/// exists. Computed as `E | E^2 | ... | E^n` with boolean matrix powers.
pub fn ancestral_closure(adj: &Adjacency) -> Adjacency {
    let n = adj.nrows();
    let mut power = adj.clone();
    let mut anc = DMatrix::from_element(n, adj.ncols(), false);
    for _ in 0..n {
        anc.zip_apply(&power, |a, e| *a = *a || e);
        power = bool_matmul(&power, adj);
    }
    anc
}

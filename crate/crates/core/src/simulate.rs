//! Finite samples from static SCMs and SVARs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scm::Scm;
use crate::stats;
use crate::svar::Svar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Static,
    TimeSeries,
}

/// Samples × variables matrix. For time series, row `t` is time step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    data: DMatrix<f64>,
    kind: DataKind,
    tau_max: Option<usize>,
}

impl Dataset {
    pub fn new(data: DMatrix<f64>, kind: DataKind, tau_max: Option<usize>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::Shape(format!("dataset is {}x{}", data.nrows(), data.ncols())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("data", "non-finite entry"));
        }
        Ok(Dataset { data, kind, tau_max })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn kind(&self) -> DataKind {
        self.kind
    }

    pub fn tau_max(&self) -> Option<usize> {
        self.tau_max
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.data.column(i).iter().copied().collect()
    }
}

/// Ancestral sampling of `m` i.i.d. rows. Draws are row-major: one standard
/// normal per node per row.
pub fn simulate_static<R: Rng + ?Sized>(scm: &Scm, m: usize, rng: &mut R) -> Result<Dataset> {
    if scm.method().is_sample_coupled() {
        return Err(Error::SampleCoupled(scm.method().as_str()));
    }
    if m == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let n = scm.n();
    let w = scm.weights();
    let parents: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| (0..i).filter(|&j| w[(j, i)] != 0.0).map(|j| (j, w[(j, i)])).collect())
        .collect();
    let mut data = DMatrix::zeros(m, n);
    let mut row = vec![0.0; n];
    for r in 0..m {
        for i in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            let mut x = scm.noise_mean()[i] + scm.noise_std()[i] * z;
            for &(j, a) in &parents[i] {
                x += a * row[j];
            }
            row[i] = x;
            data[(r, i)] = x;
        }
    }
    Dataset::new(data, DataKind::Static, None)
}

/// How the lag window before the first output row is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Draw the window from the stationary distribution.
    Stationary,
    /// Start from zeros and discard this many steps.
    BurnIn(usize),
}

/// Simulates `t_len` steps of the SVAR recursion, contemporaneous terms
/// resolved in index order. Per step, one standard normal is drawn per node.
pub fn simulate_svar<R: Rng + ?Sized>(
    model: &Svar,
    t_len: usize,
    rng: &mut R,
    init: Init,
) -> Result<Dataset> {
    if t_len == 0 {
        return Err(Error::param("t_len", "need at least one time step"));
    }
    let radius = model.spectral_radius();
    if radius >= 1.0 {
        return Err(Error::Unstable { radius });
    }
    let n = model.n();
    let p = model.tau_max();
    let burn = match init {
        Init::Stationary => 0,
        Init::BurnIn(k) => k,
    };
    let total = p + burn + t_len;
    // Row-major buffer; rows 0..p hold the initial lag window (oldest first).
    let mut buf = vec![0.0; total * n];

    if p > 0 && init == Init::Stationary {
        let window = stationary_window_cov(model.lagged_cov(), n, p);
        let chol = window
            .cholesky()
            .ok_or(Error::Numerical("stationary covariance is not positive definite"))?;
        let z = nalgebra::DVector::from_fn(n * p, |_, _| StandardNormal.sample(rng));
        // State ordering is [X(t-1); ...; X(t-p)].
        let state = chol.l() * z;
        for lag in 1..=p {
            for j in 0..n {
                buf[(p - lag) * n + j] = state[(lag - 1) * n + j];
            }
        }
    }

    let weights = model.weights();
    let mut terms: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
    for (tau, w) in weights.iter().enumerate() {
        for j in 0..n {
            for i in 0..n {
                if w[(j, i)] != 0.0 {
                    terms[i].push((tau, j, w[(j, i)]));
                }
            }
        }
    }
    let noise = model.noise_std();
    for t in p..total {
        for i in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            let mut x = noise[i] * z;
            for &(tau, j, a) in &terms[i] {
                x += a * buf[(t - tau) * n + j];
            }
            buf[t * n + i] = x;
        }
    }
    let start = p + burn;
    let data = DMatrix::from_fn(t_len, n, |r, c| buf[(start + r) * n + c]);
    Dataset::new(data, DataKind::TimeSeries, Some(p))
}

/// Covariance of `[X(t-1); ...; X(t-p)]` from `Γ(ω) = Cov(X(t), X(t-ω))`.
pub(crate) fn stationary_window_cov(gamma: &[DMatrix<f64>], n: usize, p: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n * p, n * p);
    for a in 0..p {
        for b in 0..p {
            // Cov(X(t-1-a), X(t-1-b)) = Γ(b - a), or Γ(a - b)ᵀ.
            let block = if b >= a { gamma[b - a].clone() } else { gamma[a - b].transpose() };
            s.view_mut((a * n, b * n), (n, n)).copy_from(&block);
        }
    }
    s
}

/// Centers each column and divides by its sample std (`M - 1` denominator).
pub fn standardize_sample(ds: &Dataset) -> Result<Dataset> {
    if ds.rows() < 2 {
        return Err(Error::param("data", "standardization needs at least 2 rows"));
    }
    let mut data = ds.data.clone();
    for i in 0..ds.cols() {
        let col = ds.column(i);
        let m = stats::mean(&col);
        let sd = stats::sample_std(&col);
        if sd.is_nan() || sd <= 0.0 {
            return Err(Error::DegenerateData { column: i });
        }
        for (r, x) in col.iter().enumerate() {
            data[(r, i)] = (x - m) / sd;
        }
    }
    Dataset::new(data, ds.kind, ds.tau_max)
}

//! Static linear-Gaussian SCMs: `X_i := Σ_j a_ji X_j + U_i`,
//! `U_i ~ N(m_i, s_i²)`.
//!
//! Five samplers are provided:
//!
//! * [`gen_uumc`]: coefficients drawn uniformly from a `d_i`-ball and then
//!   standardized against the parents' running correlation, so every node has
//!   population mean 0 and variance 1, the signal-to-noise ratio per parent is
//!   unbounded in both directions, and each node's parameter law depends only
//!   on its in-degree.
//! * [`gen_uvn`]: `|a| ~ U[low, high]` with random sign and unit noise.
//! * [`gen_ipa`]: UVN rescaled per node by `sqrt(1 + Σ_j a_ji²)`.
//! * [`gen_fifty_fifty`] and [`gen_iscm`]: standardized against a finite
//!   sample while the data is generated; these return the coupled dataset.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::draws::{ParameterDraws, RngDraws};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::simulate::{DataKind, Dataset};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Uumc,
    Uvn,
    Ipa,
    FiftyFifty,
    Iscm,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Uumc, Method::Uvn, Method::Ipa, Method::FiftyFifty, Method::Iscm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uumc => "uumc",
            Method::Uvn => "uvn",
            Method::Ipa => "ipa",
            Method::FiftyFifty => "fifty-fifty",
            Method::Iscm => "iscm",
        }
    }

    /// Models whose parameters were fitted to a finite sample.
    pub fn is_sample_coupled(self) -> bool {
        matches!(self, Method::FiftyFifty | Method::Iscm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("method", format!("unknown method `{s}`")))
    }
}

/// Magnitude bounds for uniformly drawn coefficients, `|a| ∈ [low, high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefRange {
    pub low: f64,
    pub high: f64,
}

impl Default for CoefRange {
    fn default() -> Self {
        CoefRange { low: 0.5, high: 2.0 }
    }
}

impl CoefRange {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && low <= high && high.is_finite()) {
            return Err(Error::param(
                "coef_low/coef_high",
                format!("need 0 < low <= high < inf, got [{low}, {high}]"),
            ));
        }
        Ok(CoefRange { low, high })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let magnitude = self.low + (self.high - self.low) * u;
        if rng.random::<bool>() {
            -magnitude
        } else {
            magnitude
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    weights: DMatrix<f64>,
    noise_std: Vec<f64>,
    noise_mean: Vec<f64>,
    corr: Option<DMatrix<f64>>,
    method: Method,
}

impl Scm {
    /// Validates shapes, strict upper triangularity of `weights` and
    /// positivity of `noise_std`.
    pub fn new(
        weights: DMatrix<f64>,
        noise_std: Vec<f64>,
        noise_mean: Vec<f64>,
        corr: Option<DMatrix<f64>>,
        method: Method,
    ) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || !weights.is_square() {
            return Err(Error::Shape(format!(
                "weights are {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        if noise_std.len() != n || noise_mean.len() != n {
            return Err(Error::Shape(format!(
                "noise vectors have lengths {} and {}, expected {n}",
                noise_std.len(),
                noise_mean.len()
            )));
        }
        if let Some(c) = &corr {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::Shape("correlation matrix does not match n".into()));
            }
        }
        for j in 0..n {
            for i in 0..=j {
                if weights[(j, i)] != 0.0 {
                    return Err(Error::Structure(format!(
                        "weight {j} -> {i} violates topological index order"
                    )));
                }
            }
        }
        if let Some(i) = noise_std.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::param("noise_std", format!("node {i} has std {}", noise_std[i])));
        }
        if weights.iter().chain(&noise_mean).any(|x| !x.is_finite()) {
            return Err(Error::param("weights", "non-finite entry"));
        }
        Ok(Scm { weights, noise_std, noise_mean, corr, method })
    }

    /// Population-standardized SCM with the given standardized coefficients:
    /// noise is set to `ŝ_i² = 1 - âᵢᵀ R âᵢ` so that every node has unit
    /// variance. Errors if some node has no room left for noise.
    pub fn from_standardized_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        let mut corr = DMatrix::identity(n, n);
        let mut noise_std = vec![1.0; n];
        for i in 0..n {
            let parents: Vec<usize> = (0..i).filter(|&j| weights[(j, i)] != 0.0).collect();
            let coef: Vec<f64> = parents.iter().map(|&j| weights[(j, i)]).collect();
            let explained = quad_form(&corr, &parents, &coef);
            let noise_var = 1.0 - explained;
            if noise_var.is_nan() || noise_var <= 0.0 {
                return Err(Error::param(
                    "weights",
                    format!("node {i} explains {explained} >= 1 of its variance"),
                ));
            }
            noise_std[i] = libm::sqrt(noise_var);
            update_corr(&mut corr, i, &parents, &coef);
        }
        Scm::new(weights, noise_std, vec![0.0; n], Some(corr), Method::Uumc)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    /// Entry `(j, i)` is the coefficient of `X_j` in the assignment of `X_i`.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn noise_std(&self) -> &[f64] {
        &self.noise_std
    }

    pub fn noise_mean(&self) -> &[f64] {
        &self.noise_mean
    }

    /// Analytic correlation matrix, kept only by the UUMC sampler.
    pub fn corr(&self) -> Option<&DMatrix<f64>> {
        self.corr.as_ref()
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Applies the scaling product `c ⊙ Θ_i`: node `i`'s coefficients and
    /// noise mean are multiplied by `c`, its noise std by `|c|`. The stored
    /// correlation matrix no longer applies and is dropped.
    pub fn scale_node(&self, i: usize, c: f64) -> Result<Scm> {
        if i >= self.n() {
            return Err(Error::param("node", format!("{i} out of range")));
        }
        let mut out = self.clone();
        for j in 0..self.n() {
            out.weights[(j, i)] *= c;
        }
        out.noise_mean[i] *= c;
        out.noise_std[i] *= libm::fabs(c);
        out.corr = None;
        Scm::new(out.weights, out.noise_std, out.noise_mean, None, out.method)
    }
}

fn quad_form(corr: &DMatrix<f64>, idx: &[usize], coef: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, &j) in idx.iter().enumerate() {
        for (b, &k) in idx.iter().enumerate() {
            acc += coef[a] * coef[b] * corr[(j, k)];
        }
    }
    acc
}

/// `ρ_ij = ρ_ji = Σ_k â_ki ρ_jk` for every `j < i`.
fn update_corr(corr: &mut DMatrix<f64>, i: usize, parents: &[usize], coef: &[f64]) {
    for j in 0..i {
        let rho: f64 = parents.iter().zip(coef).map(|(&k, &a)| a * corr[(j, k)]).sum();
        corr[(i, j)] = rho;
        corr[(j, i)] = rho;
    }
}

/// One node of the UUMC construction.
///
/// Scales the raw Gaussian direction to length `r`, gives the noise
/// `s' = sqrt(1 - r²)`, and divides both by the resulting standard deviation
/// `σ' = sqrt(a'ᵀ R a' + s'²)`. Returns `None` for an all-zero direction.
pub fn uumc_node(
    corr: &DMatrix<f64>,
    parents: &[usize],
    direction: &[f64],
    radius: f64,
) -> Option<(Vec<f64>, f64)> {
    let norm = libm::sqrt(direction.iter().map(|x| x * x).sum::<f64>());
    if norm == 0.0 {
        return None;
    }
    let scaled: Vec<f64> = direction.iter().map(|x| x * radius / norm).collect();
    let noise = libm::sqrt(1.0 - radius * radius);
    let sigma = libm::sqrt(quad_form(corr, parents, &scaled) + noise * noise);
    Some((scaled.iter().map(|a| a / sigma).collect(), noise / sigma))
}

pub fn gen_uumc<R: Rng + ?Sized>(dag: &Dag, rng: &mut R) -> Result<Scm> {
    gen_uumc_with(dag, &mut RngDraws(rng))
}

/// UUMC sampler over an explicit draw source. Nodes are visited in index
/// order; roots keep `ŝ = 1`.
pub fn gen_uumc_with<D: ParameterDraws + ?Sized>(dag: &Dag, draws: &mut D) -> Result<Scm> {
    let n = dag.n();
    let mut weights = DMatrix::zeros(n, n);
    let mut noise_std = vec![1.0; n];
    let mut corr = DMatrix::identity(n, n);
    for i in 0..n {
        let parents: Vec<usize> = dag.parents(i).collect();
        let d = parents.len();
        if d == 0 {
            continue;
        }
        let node = draw_ball_node(&corr, &parents, draws)
            .ok_or(Error::DegenerateDraw { node: i, what: "zero-norm coefficient direction" })?;
        let (coef, noise) = node;
        for (&j, &a) in parents.iter().zip(&coef) {
            weights[(j, i)] = a;
        }
        noise_std[i] = noise;
        update_corr(&mut corr, i, &parents, &coef);
    }
    Scm::new(weights, noise_std, vec![0.0; n], Some(corr), Method::Uumc)
}

fn draw_ball_node<D: ParameterDraws + ?Sized>(
    corr: &DMatrix<f64>,
    parents: &[usize],
    draws: &mut D,
) -> Option<(Vec<f64>, f64)> {
    let d = parents.len();
    // An exactly zero direction is redrawn once.
    for _ in 0..2 {
        let direction = draws.normals(d);
        let radius = draws.radius(d);
        if let Some(node) = uumc_node(corr, parents, &direction, radius) {
            return Some(node);
        }
    }
    None
}

fn uvn_weights<R: Rng + ?Sized>(dag: &Dag, range: CoefRange, rng: &mut R) -> DMatrix<f64> {
    let n = dag.n();
    let mut weights = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j + 1..n {
            if dag.has_edge(j, i) {
                weights[(j, i)] = range.sample(rng);
            }
        }
    }
    weights
}

/// Unit-variance-noise baseline: `|a_ji| ~ U[low, high]`, random sign,
/// `s_i = 1`.
pub fn gen_uvn<R: Rng + ?Sized>(dag: &Dag, range: CoefRange, rng: &mut R) -> Result<Scm> {
    let n = dag.n();
    let weights = uvn_weights(dag, range, rng);
    Scm::new(weights, vec![1.0; n], vec![0.0; n], None, Method::Uvn)
}

/// Independent-parents baseline: a UVN draw with column `i` and `s_i`
/// divided by `sqrt(1 + Σ_j a_ji²)`.
pub fn gen_ipa<R: Rng + ?Sized>(dag: &Dag, range: CoefRange, rng: &mut R) -> Result<Scm> {
    let n = dag.n();
    let mut weights = uvn_weights(dag, range, rng);
    let mut noise_std = vec![1.0; n];
    for i in 0..n {
        let ss: f64 = (0..i).map(|j| weights[(j, i)] * weights[(j, i)]).sum();
        let divisor = libm::sqrt(1.0 + ss);
        for j in 0..i {
            weights[(j, i)] /= divisor;
        }
        noise_std[i] = 1.0 / divisor;
    }
    Scm::new(weights, noise_std, vec![0.0; n], None, Method::Ipa)
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::param("n_samples", "need at least 2 samples"));
    }
    Ok(())
}

fn normal_column<R: Rng + ?Sized>(m: usize, std: f64, rng: &mut R) -> Vec<f64> {
    (0..m).map(|_| std * Distribution::<f64>::sample(&StandardNormal, rng)).collect::<Vec<f64>>()
}

fn combine(data: &DMatrix<f64>, parents: &[usize], coef: &[f64]) -> Vec<f64> {
    let m = data.nrows();
    let mut out = vec![0.0; m];
    for (&j, &a) in parents.iter().zip(coef) {
        let col = data.column(j);
        for (o, x) in out.iter_mut().zip(col.iter()) {
            *o += a * x;
        }
    }
    out
}

/// 50-50 baseline.
///
/// Node by node, the noiseless part `Σ_j a_ji X_j` is computed from the
/// parents' final data; it and the coefficients are divided by `√2` times
/// its sample std, then fresh noise with std `√2/2` is added. Roots are
/// unit-std noise.
pub fn gen_fifty_fifty<R: Rng + ?Sized>(
    dag: &Dag,
    n_samples: usize,
    range: CoefRange,
    rng: &mut R,
) -> Result<(Scm, Dataset)> {
    check_samples(n_samples)?;
    let n = dag.n();
    let half = core::f64::consts::FRAC_1_SQRT_2;
    let mut weights = DMatrix::zeros(n, n);
    let mut noise_std = vec![1.0; n];
    let mut data = DMatrix::zeros(n_samples, n);
    for i in 0..n {
        let parents: Vec<usize> = dag.parents(i).collect();
        if parents.is_empty() {
            let col = normal_column(n_samples, 1.0, rng);
            data.set_column(i, &nalgebra::DVector::from_vec(col));
            continue;
        }
        let mut accepted = None;
        for _ in 0..2 {
            let coef: Vec<f64> = parents.iter().map(|_| range.sample(rng)).collect();
            let signal = combine(&data, &parents, &coef);
            let sd = stats::sample_std(&signal);
            if sd > 0.0 {
                accepted = Some((coef, signal, sd));
                break;
            }
        }
        let (coef, signal, sd) = accepted
            .ok_or(Error::DegenerateDraw { node: i, what: "noiseless column has zero spread" })?;
        let scale = 1.0 / (core::f64::consts::SQRT_2 * sd);
        for (&j, &a) in parents.iter().zip(&coef) {
            weights[(j, i)] = a * scale;
        }
        noise_std[i] = half;
        let noise = normal_column(n_samples, half, rng);
        let col: Vec<f64> = signal.iter().zip(&noise).map(|(s, u)| s * scale + u).collect();
        data.set_column(i, &nalgebra::DVector::from_vec(col));
    }
    let scm = Scm::new(weights, noise_std, vec![0.0; n], None, Method::FiftyFifty)?;
    Ok((scm, Dataset::new(data, DataKind::Static, None)?))
}

/// Internally standardized SCM.
///
/// Node by node, a UVN-style column is formed from the parents' already
/// standardized columns plus unit noise, then the column, its coefficients
/// and its noise std are divided by the column's sample std. Every returned
/// column has sample std 1.
pub fn gen_iscm<R: Rng + ?Sized>(
    dag: &Dag,
    n_samples: usize,
    range: CoefRange,
    rng: &mut R,
) -> Result<(Scm, Dataset)> {
    check_samples(n_samples)?;
    let n = dag.n();
    let mut weights = DMatrix::zeros(n, n);
    let mut noise_std = vec![1.0; n];
    let mut data = DMatrix::zeros(n_samples, n);
    for i in 0..n {
        let parents: Vec<usize> = dag.parents(i).collect();
        let mut accepted = None;
        for _ in 0..2 {
            let coef: Vec<f64> = parents.iter().map(|_| range.sample(rng)).collect();
            let noise = normal_column(n_samples, 1.0, rng);
            let col: Vec<f64> = combine(&data, &parents, &coef)
                .iter()
                .zip(&noise)
                .map(|(s, u)| s + u)
                .collect();
            let sd = stats::sample_std(&col);
            if sd > 0.0 {
                accepted = Some((coef, col, sd));
                break;
            }
        }
        let (coef, col, sd) = accepted
            .ok_or(Error::DegenerateDraw { node: i, what: "column has zero spread" })?;
        for (&j, &a) in parents.iter().zip(&coef) {
            weights[(j, i)] = a / sd;
        }
        noise_std[i] = 1.0 / sd;
        let col: Vec<f64> = col.iter().map(|x| x / sd).collect();
        data.set_column(i, &nalgebra::DVector::from_vec(col));
    }
    let scm = Scm::new(weights, noise_std, vec![0.0; n], None, Method::Iscm)?;
    Ok((scm, Dataset::new(data, DataKind::Static, None)?))
}

/// Population variances and covariance matrix by forward recursion over
/// the topological order:
/// `Cov_ii = Σ_jk a_ji a_ki Cov_jk + s_i²`, `Cov_ij = Σ_k a_ki Cov_jk`.
pub fn analytic_moments(scm: &Scm) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if scm.method.is_sample_coupled() {
        return Err(Error::SampleCoupled(scm.method.as_str()));
    }
    let n = scm.n();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        let parents: Vec<usize> = (0..i).filter(|&j| scm.weights[(j, i)] != 0.0).collect();
        let coef: Vec<f64> = parents.iter().map(|&j| scm.weights[(j, i)]).collect();
        for j in 0..i {
            let c: f64 = parents.iter().zip(&coef).map(|(&k, &a)| a * cov[(j, k)]).sum();
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
        cov[(i, i)] = quad_form(&cov, &parents, &coef) + scm.noise_std[i] * scm.noise_std[i];
    }
    let variances = (0..n).map(|i| cov[(i, i)]).collect();
    Ok((variances, cov))
}

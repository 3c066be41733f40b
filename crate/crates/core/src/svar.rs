//! Standardized structural VAR models:
//! `X_i(t) := Σ_j Σ_τ â_ji(τ) X_j(t - τ) + ŝ_i Z_i(t)`.
//!
//! [`gen_uumc_svar`] draws the parameters from an Ornstein-Uhlenbeck-inspired
//! recipe: every self-dependent process gets an auto-dependence `b' ~ U(0,1)`
//! raised to a random sampling interval `Δ ~ F(100, 100)`, cross effects are
//! drawn uniformly from a ball whose radius is capped by the remaining noise
//! budget, and the process is finally rescaled so every variable has unit
//! stationary variance.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur};
use rand::Rng;

use crate::draws::{ParameterDraws, RngDraws};
use crate::error::{Error, Result};
use crate::graph::TsGraph;

/// Redraws of the full parameter set allowed after an unstable draw.
pub const MAX_REDRAWS: usize = 20;

const LYAPUNOV_TOL: f64 = 1e-12;
const LYAPUNOV_MAX_DOUBLINGS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Svar {
    /// `weights[τ][(j, i)] = â_ji(τ)`.
    weights: Vec<DMatrix<f64>>,
    noise_std: Vec<f64>,
    delta: f64,
    /// `lagged_cov[ω] = Cov(X(t), X(t - ω))` for `ω = 0..=tau_max`.
    lagged_cov: Vec<DMatrix<f64>>,
    contributions: DMatrix<f64>,
    spectral_radius: f64,
}

impl Svar {
    /// Builds a model from explicit coefficients and noise scales and solves
    /// for its stationary moments. The per-parent contributions are the sums
    /// of the coefficients over lags.
    pub fn from_parts(weights: Vec<DMatrix<f64>>, noise_std: Vec<f64>, delta: f64) -> Result<Svar> {
        validate_parts(&weights, &noise_std, delta)?;
        let rf = reduced_form(&weights)?;
        let radius = spectral_radius(&rf)?;
        if radius >= 1.0 {
            return Err(Error::Unstable { radius });
        }
        let noise_var: Vec<f64> = noise_std.iter().map(|s| s * s).collect();
        let lagged_cov = stationary_covariance(&rf, &noise_var)?;
        let contributions = lag_sums(&weights);
        Ok(Svar { weights, noise_std, delta, lagged_cov, contributions, spectral_radius: radius })
    }

    /// Skips the stability check and moment solve.
    #[cfg(test)]
    pub(crate) fn from_parts_unchecked(
        weights: Vec<DMatrix<f64>>,
        noise_std: Vec<f64>,
        delta: f64,
    ) -> Svar {
        let n = noise_std.len();
        let radius = reduced_form(&weights).and_then(|rf| spectral_radius(&rf)).unwrap_or(f64::INFINITY);
        let contributions = lag_sums(&weights);
        let lagged_cov = vec![DMatrix::zeros(n, n); weights.len()];
        Svar { weights, noise_std, delta, lagged_cov, contributions, spectral_radius: radius }
    }

    pub fn n(&self) -> usize {
        self.noise_std.len()
    }

    pub fn tau_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn noise_std(&self) -> &[f64] {
        &self.noise_std
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Stationary lagged covariances `Cov(X(t), X(t - ω))`, `ω = 0..=tau_max`.
    pub fn lagged_cov(&self) -> &[DMatrix<f64>] {
        &self.lagged_cov
    }

    /// Lagged correlations `ρ_jk(ω) = Cov(X_j(t), X_k(t - ω)) / (σ_j σ_k)`.
    pub fn lagged_corr(&self) -> Vec<DMatrix<f64>> {
        let sd: Vec<f64> = (0..self.n()).map(|i| libm::sqrt(self.lagged_cov[0][(i, i)])).collect();
        self.lagged_cov
            .iter()
            .map(|g| DMatrix::from_fn(g.nrows(), g.ncols(), |j, k| g[(j, k)] / (sd[j] * sd[k])))
            .collect()
    }

    /// `contributions[(j, i)]` is the summed effect of `X_j` on `X_i` over
    /// all lags; the diagonal holds the auto-dependence.
    pub fn contributions(&self) -> &DMatrix<f64> {
        &self.contributions
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// Stationary variance of each `X_i` implied by its structural equation,
    /// `Σ_jk Σ_τν â_ji(τ) â_ki(ν) ρ_jk(τ, ν) + ŝ_i²`, evaluated with the
    /// lagged correlations. Equals 1 for a standardized model.
    pub fn implied_variance(&self) -> Vec<f64> {
        let rho = self.lagged_corr();
        let n = self.n();
        let p = self.tau_max();
        // Cov(X_j(t - τ), X_k(t - ν)) = Γ_jk(ν - τ), or Γ_kj(τ - ν).
        let cross = |j: usize, tau: usize, k: usize, nu: usize| {
            if nu >= tau {
                rho[nu - tau][(j, k)]
            } else {
                rho[tau - nu][(k, j)]
            }
        };
        (0..n)
            .map(|i| {
                let mut v = self.noise_std[i] * self.noise_std[i];
                for tau in 0..=p {
                    for j in 0..n {
                        let a = self.weights[tau][(j, i)];
                        if a == 0.0 {
                            continue;
                        }
                        for nu in 0..=p {
                            for k in 0..n {
                                let b = self.weights[nu][(k, i)];
                                if b != 0.0 {
                                    v += a * b * cross(j, tau, k, nu);
                                }
                            }
                        }
                    }
                }
                v
            })
            .collect()
    }
}

fn validate_parts(weights: &[DMatrix<f64>], noise_std: &[f64], delta: f64) -> Result<()> {
    let n = noise_std.len();
    if n == 0 {
        return Err(Error::param("n", "model needs at least one process"));
    }
    if weights.is_empty() {
        return Err(Error::Shape("weights need at least the lag-0 slice".into()));
    }
    for (tau, w) in weights.iter().enumerate() {
        if w.nrows() != n || w.ncols() != n {
            return Err(Error::Shape(format!(
                "lag {tau} weights are {}x{}, expected {n}x{n}",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("weights", format!("non-finite coefficient at lag {tau}")));
        }
    }
    if noise_std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::param("noise_std", "noise scales must be positive and finite"));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param("delta", format!("sampling interval {delta} must be positive")));
    }
    Ok(())
}

fn lag_sums(weights: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = weights[0].nrows();
    weights.iter().fold(DMatrix::zeros(n, n), |acc, w| acc + w)
}

/// Lag-only form `X(t) = Σ_{τ≥1} B(τ) X(t - τ) + M U(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedForm {
    /// `lags[τ - 1] = B(τ) = M A(τ)ᵀ`.
    pub lags: Vec<DMatrix<f64>>,
    /// `M = (I - A(0)ᵀ)⁻¹`.
    pub mixing: DMatrix<f64>,
}

impl ReducedForm {
    pub fn n(&self) -> usize {
        self.mixing.nrows()
    }

    /// Companion matrix of the lag recursion, `n·p × n·p`.
    pub fn companion(&self) -> DMatrix<f64> {
        let n = self.n();
        let p = self.lags.len();
        let mut c = DMatrix::zeros(n * p, n * p);
        for (k, b) in self.lags.iter().enumerate() {
            c.view_mut((0, k * n), (n, n)).copy_from(b);
        }
        for k in 1..p {
            c.view_mut((k * n, (k - 1) * n), (n, n)).fill_with_identity();
        }
        c
    }
}

/// Resolves contemporaneous effects. `weights[τ][(j, i)]` is `a_ji(τ)`.
pub fn reduced_form(weights: &[DMatrix<f64>]) -> Result<ReducedForm> {
    let Some(a0) = weights.first() else {
        return Err(Error::Shape("weights need at least the lag-0 slice".into()));
    };
    let n = a0.nrows();
    if a0.ncols() != n {
        return Err(Error::Shape(format!("lag-0 weights are {}x{}", a0.nrows(), a0.ncols())));
    }
    for j in 0..n {
        for i in 0..=j {
            if a0[(j, i)] != 0.0 {
                return Err(Error::Structure(format!(
                    "contemporaneous effect {j} -> {i} violates index order"
                )));
            }
        }
    }
    let lower = DMatrix::identity(n, n) - a0.transpose();
    let mixing = lower
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::Numerical("contemporaneous system is singular"))?;
    let lags = weights[1..].iter().map(|a| &mixing * a.transpose()).collect();
    Ok(ReducedForm { lags, mixing })
}

/// Largest eigenvalue modulus of the companion matrix; 0 without lags.
pub fn spectral_radius(rf: &ReducedForm) -> Result<f64> {
    if rf.lags.is_empty() {
        return Ok(0.0);
    }
    let schur = Schur::try_new(rf.companion(), f64::EPSILON, 10_000)
        .ok_or(Error::Numerical("eigenvalue iteration did not converge"))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| libm::hypot(z.re, z.im))
        .fold(0.0, f64::max))
}

/// Returns whether the process is stable and the companion spectral radius.
pub fn stability_check(weights: &[DMatrix<f64>]) -> Result<(bool, f64)> {
    let radius = spectral_radius(&reduced_form(weights)?)?;
    Ok((radius < 1.0, radius))
}

/// Stationary lagged covariances `Γ(ω) = Cov(X(t), X(t - ω))` for
/// `ω = 0..=p`, given independent structural noise with variances
/// `noise_var`.
///
/// The companion covariance `S = Σ_k Cᵏ Q (Cᵏ)ᵀ` is summed by repeated
/// doubling (`S ← S + A S Aᵀ`, `A ← A²`); `Γ(p)` follows from the
/// Yule-Walker recursion.
pub fn stationary_covariance(rf: &ReducedForm, noise_var: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = rf.n();
    if noise_var.len() != n {
        return Err(Error::Shape(format!("{} noise variances for {n} processes", noise_var.len())));
    }
    let m = &rf.mixing;
    let sigma_u = DMatrix::from_fn(n, n, |r, c| {
        (0..n).map(|k| m[(r, k)] * noise_var[k] * m[(c, k)]).sum::<f64>()
    });
    let p = rf.lags.len();
    if p == 0 {
        return Ok(vec![sigma_u]);
    }
    let radius = spectral_radius(rf)?;
    if radius >= 1.0 {
        return Err(Error::Unstable { radius });
    }
    let mut a = rf.companion();
    let mut s = DMatrix::zeros(n * p, n * p);
    s.view_mut((0, 0), (n, n)).copy_from(&sigma_u);
    let mut converged = false;
    for _ in 0..LYAPUNOV_MAX_DOUBLINGS {
        let step = &a * &s * a.transpose();
        s += &step;
        if step.amax() <= LYAPUNOV_TOL * s.amax() {
            converged = true;
            break;
        }
        a = &a * &a;
    }
    if !converged {
        return Err(Error::Numerical("stationary covariance did not converge"));
    }
    s = (&s + s.transpose()) * 0.5;
    let mut gamma: Vec<DMatrix<f64>> =
        (0..p).map(|w| s.view((0, w * n), (n, n)).into_owned()).collect();
    let last = rf
        .lags
        .iter()
        .enumerate()
        .fold(DMatrix::zeros(n, n), |acc, (k, b)| acc + b * &gamma[p - 1 - k]);
    gamma.push(last);
    Ok(gamma)
}

/// Multiplier turning a raw cross effect into its effect after sampling at
/// interval `delta`: `(b_pᐞ - b_cᐞ) / (b_p - b_c)` with `ᐞ = delta`.
///
/// Near-equal strengths use the derivative `Δ·b^(Δ-1)`. Two processes
/// without auto-dependence keep the raw effect (factor 1).
pub fn cross_contribution_factor(b_parent: f64, b_child: f64, delta: f64) -> f64 {
    if b_parent == 0.0 && b_child == 0.0 {
        return 1.0;
    }
    let gap = b_parent - b_child;
    if gap.abs() < 1e-12 {
        let b = 0.5 * (b_parent + b_child);
        return delta * libm::pow(b, delta - 1.0);
    }
    (libm::pow(b_parent, delta) - libm::pow(b_child, delta)) / gap
}

pub fn gen_uumc_svar<R: Rng + ?Sized>(g: &TsGraph, rng: &mut R) -> Result<Svar> {
    gen_uumc_svar_with(g, &mut RngDraws(rng))
}

/// UUMC SVAR sampler over an explicit draw source.
///
/// Per attempt the draw order is: `Δ`; `b'_ii` for every self-dependent
/// process in index order; then per process `i`, the lag split of the
/// auto-dependence, the cross-parent direction and radius, and the lag split
/// of each cross parent in index order. Lag splits over a single lag draw
/// nothing.
pub fn gen_uumc_svar_with<D: ParameterDraws + ?Sized>(g: &TsGraph, draws: &mut D) -> Result<Svar> {
    let mut radius = f64::NAN;
    for _ in 0..=MAX_REDRAWS {
        let raw = draw_raw(g, draws)?;
        let rf = reduced_form(&raw.weights)?;
        radius = spectral_radius(&rf)?;
        if radius >= 1.0 {
            continue;
        }
        return standardize(raw, &rf, radius);
    }
    Err(Error::RetriesExhausted { attempts: MAX_REDRAWS + 1, radius })
}

struct RawDraw {
    weights: Vec<DMatrix<f64>>,
    noise_std: Vec<f64>,
    delta: f64,
    /// Summed effects before rescaling, auto-dependence on the diagonal.
    contributions: DMatrix<f64>,
}

fn draw_raw<D: ParameterDraws + ?Sized>(g: &TsGraph, draws: &mut D) -> Result<RawDraw> {
    let n = g.n();
    let p = g.tau_max();
    let delta = draws.sampling_interval();
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param("delta", format!("sampling interval {delta} must be positive")));
    }
    let lags_of = |j: usize, i: usize| -> Vec<usize> { (0..=p).filter(|&t| g.has_edge(j, i, t)).collect() };

    let strength: Vec<f64> = (0..n)
        .map(|i| if lags_of(i, i).is_empty() { 0.0 } else { draws.auto_strength() })
        .collect();

    let mut weights = vec![DMatrix::zeros(n, n); p + 1];
    let mut contributions = DMatrix::zeros(n, n);
    let mut noise_std = vec![1.0; n];
    for i in 0..n {
        let mut s = 1.0;
        let self_lags = lags_of(i, i);
        if !self_lags.is_empty() {
            let b = libm::pow(strength[i], delta);
            spread_over_lags(&mut weights, i, i, &self_lags, b, draws)?;
            contributions[(i, i)] = b;
            s = libm::sqrt(1.0 - b * b);
        }

        let parents: Vec<usize> = (0..n).filter(|&j| j != i && !lags_of(j, i).is_empty()).collect();
        if !parents.is_empty() {
            let (direction, r) = draw_direction(parents.len(), i, draws)?;
            let raw: Vec<f64> = direction.iter().map(|x| r * s * x).collect();
            s *= libm::sqrt(1.0 - r * r);
            for (&j, &bp) in parents.iter().zip(&raw) {
                let b = bp * cross_contribution_factor(strength[j], strength[i], delta);
                spread_over_lags(&mut weights, j, i, &lags_of(j, i), b, draws)?;
                contributions[(j, i)] = b;
            }
        }
        if s.is_nan() || s <= 0.0 {
            return Err(Error::DegenerateDraw { node: i, what: "no noise left" });
        }
        noise_std[i] = s;
    }
    Ok(RawDraw { weights, noise_std, delta, contributions })
}

/// Unit direction of length `d` and ball radius, redrawing an all-zero
/// direction once.
fn draw_direction<D: ParameterDraws + ?Sized>(
    d: usize,
    node: usize,
    draws: &mut D,
) -> Result<(Vec<f64>, f64)> {
    for _ in 0..2 {
        let v = draws.normals(d);
        let r = draws.radius(d);
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 0.0 {
            return Ok((v.iter().map(|x| x / norm).collect(), r));
        }
    }
    Err(Error::DegenerateDraw { node, what: "zero-norm cross-effect direction" })
}

/// Splits the summed effect `total` of `j` on `i` over `lags` in proportion
/// to raw normal draws.
fn spread_over_lags<D: ParameterDraws + ?Sized>(
    weights: &mut [DMatrix<f64>],
    j: usize,
    i: usize,
    lags: &[usize],
    total: f64,
    draws: &mut D,
) -> Result<()> {
    if let [tau] = lags {
        weights[*tau][(j, i)] = total;
        return Ok(());
    }
    for _ in 0..2 {
        let raw = draws.normals(lags.len());
        let sum: f64 = raw.iter().sum();
        if sum != 0.0 {
            for (&tau, x) in lags.iter().zip(&raw) {
                weights[tau][(j, i)] = x * total / sum;
            }
            return Ok(());
        }
    }
    Err(Error::DegenerateDraw { node: i, what: "lag split sums to zero" })
}

/// Rescales a stable raw draw to unit stationary variances:
/// `â_ji = a'_ji C_j / C_i`, `ŝ_i = s'_i / C_i` with `C_i² = Γ_ii(0)`.
fn standardize(raw: RawDraw, rf: &ReducedForm, radius: f64) -> Result<Svar> {
    let n = raw.noise_std.len();
    let noise_var: Vec<f64> = raw.noise_std.iter().map(|s| s * s).collect();
    let gamma = stationary_covariance(rf, &noise_var)?;
    let c: Vec<f64> = (0..n).map(|i| libm::sqrt(gamma[0][(i, i)])).collect();
    let rescale = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |j, i| m[(j, i)] * c[j] / c[i]);
    let weights = raw.weights.iter().map(rescale).collect();
    let contributions = rescale(&raw.contributions);
    let noise_std = raw.noise_std.iter().zip(&c).map(|(s, ci)| s / ci).collect();
    let lagged_cov = gamma
        .iter()
        .map(|g| DMatrix::from_fn(n, n, |j, k| g[(j, k)] / (c[j] * c[k])))
        .collect();
    Ok(Svar { weights, noise_std, delta: raw.delta, lagged_cov, contributions, spectral_radius: radius })
}

/// Summed effect `Σ_τ â_ji(τ)` of process `j` on a different process `i`.
pub fn parent_contribution(svar: &Svar, j: usize, i: usize) -> Result<f64> {
    let n = svar.n();
    if j >= n || i >= n {
        return Err(Error::param("node", format!("({j}, {i}) out of range for {n} processes")));
    }
    if j == i {
        return Err(Error::param("node", "parent and child must differ"));
    }
    if svar.weights.iter().all(|w| w[(j, i)] == 0.0) {
        return Err(Error::MissingEdge { from: j, to: i });
    }
    Ok(svar.weights.iter().map(|w| w[(j, i)]).sum())
}

/// Largest sampling interval for which the confounding introduced by
/// subsampling a bivariate OU process with equal rates `kappa` and coupling
/// `|kappa12|` stays below `p`.
///
/// Solves `(|κ12| / 2κ)(1 - (2κΔ + 1)e^{-2κΔ}) = p` by bisection. Returns
/// `+∞` when the confounding never reaches `p`.
pub fn confounding_bound(kappa: f64, kappa12_mag: f64, p: f64) -> Result<f64> {
    for (name, v) in [("kappa", kappa), ("kappa12", kappa12_mag), ("p", p)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, format!("{v} must be positive and finite")));
        }
    }
    let ceiling = kappa12_mag / (2.0 * kappa);
    if p >= ceiling {
        return Ok(f64::INFINITY);
    }
    let target = p / ceiling;
    let mut hi = 1.0;
    while confounding_shape(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if confounding_shape(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / (2.0 * kappa))
}

/// `1 - (1 + x)e^{-x}`, increasing from 0 to 1 on `x ≥ 0`.
fn confounding_shape(x: f64) -> f64 {
    if x < 0.5 {
        // Σ_{k≥2} (-1)^k (k - 1) x^k / k!
        let mut term = -x; // (-1)^k x^k / k! for k = 1
        let mut sum = 0.0;
        for k in 2..40 {
            term *= -x / k as f64;
            sum += (k - 1) as f64 * term;
        }
        sum
    } else {
        1.0 - (1.0 + x) * libm::exp(-x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::VecDeque;
    use approx::assert_relative_eq;

    use crate::rng::from_seed;

    #[derive(Default)]
    struct Scripted {
        normals: VecDeque<Vec<f64>>,
        radii: VecDeque<f64>,
        strengths: VecDeque<f64>,
        intervals: VecDeque<f64>,
    }

    impl ParameterDraws for Scripted {
        fn normals(&mut self, k: usize) -> Vec<f64> {
            let v = self.normals.pop_front().expect("scripted normals");
            assert_eq!(v.len(), k);
            v
        }
        fn radius(&mut self, _d: usize) -> f64 {
            self.radii.pop_front().expect("scripted radius")
        }
        fn auto_strength(&mut self) -> f64 {
            self.strengths.pop_front().expect("scripted strength")
        }
        fn sampling_interval(&mut self) -> f64 {
            self.intervals.pop_front().expect("scripted interval")
        }
    }

    fn ar(coefs: &[f64]) -> Vec<DMatrix<f64>> {
        let mut w = vec![DMatrix::zeros(1, 1)];
        w.extend(coefs.iter().map(|&a| DMatrix::from_element(1, 1, a)));
        w
    }

    #[test]
    fn ar1_forced_draw_needs_no_rescale() {
        let g = TsGraph::from_edges(1, 1, &[(0, 0, 1)]).unwrap();
        let mut draws = Scripted {
            strengths: [0.5].into(),
            intervals: [1.0].into(),
            ..Default::default()
        };
        let m = gen_uumc_svar_with(&g, &mut draws).unwrap();
        assert_relative_eq!(m.weights()[1][(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(m.noise_std()[0], libm::sqrt(0.75), epsilon = 1e-12);
        assert_relative_eq!(m.lagged_cov()[0][(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m.lagged_cov()[1][(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(m.spectral_radius(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn stability_examples() {
        let (ok, r) = stability_check(&ar(&[0.5])).unwrap();
        assert!(ok);
        assert_relative_eq!(r, 0.5, epsilon = 1e-12);

        let (ok, r) = stability_check(&ar(&[1.0])).unwrap();
        assert!(!ok);
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);

        // Largest root of z² - 0.6z - 0.3.
        let root = (0.6 + libm::sqrt(0.36 + 1.2)) / 2.0;
        let (ok, r) = stability_check(&ar(&[0.6, 0.3])).unwrap();
        assert!(ok);
        assert_relative_eq!(r, root, epsilon = 1e-10);
        assert!((r - 0.9245).abs() < 1e-4);
    }

    #[test]
    fn stability_rejects_cyclic_contemporaneous_slice() {
        let mut a0 = DMatrix::zeros(2, 2);
        a0[(1, 0)] = 0.3;
        assert!(matches!(stability_check(&[a0]), Err(Error::Structure(_))));
    }

    #[test]
    fn cross_factor_examples() {
        assert_relative_eq!(cross_contribution_factor(0.5, 0.5, 1.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(cross_contribution_factor(0.9, 0.3, 1.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(cross_contribution_factor(0.9, 0.3, 2.0), 1.2, epsilon = 1e-12);
        assert_eq!(cross_contribution_factor(0.0, 0.0, 1.7), 1.0);
        // One side without auto-dependence: b^Δ / b.
        assert_relative_eq!(
            cross_contribution_factor(0.0, 0.4, 2.0),
            0.4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn cross_factor_is_continuous_at_equal_strengths() {
        for &(b, d) in &[(0.3, 0.7), (0.5, 1.3), (0.95, 2.5)] {
            let limit = d * libm::pow(b, d - 1.0);
            let near = cross_contribution_factor(b + 1e-9, b, d);
            assert!((near - limit).abs() < 1e-6, "{near} vs {limit}");
            let at = cross_contribution_factor(b, b, d);
            assert_relative_eq!(at, limit, epsilon = 1e-15);
            let within = cross_contribution_factor(b + 5e-13, b, d);
            assert!((within - limit).abs() < 1e-8);
        }
    }

    #[test]
    fn reduced_form_without_contemporaneous_effects() {
        let mut a1 = DMatrix::zeros(2, 2);
        a1[(0, 1)] = 0.4;
        a1[(1, 1)] = 0.2;
        let rf = reduced_form(&[DMatrix::zeros(2, 2), a1.clone()]).unwrap();
        assert_eq!(rf.mixing, DMatrix::identity(2, 2));
        assert_eq!(rf.lags[0], a1.transpose());
    }

    #[test]
    fn reduced_form_two_node_mixing() {
        let c = 0.7;
        let mut a0 = DMatrix::zeros(2, 2);
        a0[(0, 1)] = c;
        let rf = reduced_form(&[a0]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, c, 1.0]);
        assert_relative_eq!(rf.mixing, expected, epsilon = 1e-15);
    }

    #[test]
    fn mixing_matches_neumann_series() {
        let mut rng = from_seed(5);
        let n = 5;
        let a0 = DMatrix::from_fn(n, n, |j, i| {
            if j < i {
                rng.random::<f64>() - 0.5
            } else {
                0.0
            }
        });
        let rf = reduced_form(core::slice::from_ref(&a0)).unwrap();
        let at = a0.transpose();
        let mut series = DMatrix::identity(n, n);
        let mut power = DMatrix::identity(n, n);
        for _ in 1..n {
            power = &power * &at;
            series += &power;
        }
        assert_eq!((&power * &at).amax(), 0.0);
        assert_relative_eq!(rf.mixing, series, epsilon = 1e-12);
    }

    #[test]
    fn ar1_covariance() {
        let rf = reduced_form(&ar(&[0.5])).unwrap();
        let g = stationary_covariance(&rf, &[0.75]).unwrap();
        assert_relative_eq!(g[0][(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(g[1][(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn decoupled_processes_have_diagonal_covariance() {
        let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -0.3]);
        let rf = reduced_form(&[DMatrix::zeros(2, 2), a1]).unwrap();
        let g = stationary_covariance(&rf, &[1.0, 2.0]).unwrap();
        assert_eq!(g[0][(0, 1)], 0.0);
        assert_eq!(g[0][(1, 0)], 0.0);
        assert_relative_eq!(g[0][(0, 0)], 1.0 / 0.75, epsilon = 1e-12);
        assert_relative_eq!(g[0][(1, 1)], 2.0 / 0.91, epsilon = 1e-12);
    }

    fn random_stable_model(seed: u64, n: usize, p: usize) -> (ReducedForm, Vec<f64>) {
        let mut rng = from_seed(seed);
        loop {
            let weights: Vec<DMatrix<f64>> = (0..=p)
                .map(|tau| {
                    DMatrix::from_fn(n, n, |j, i| {
                        if tau == 0 && j >= i {
                            0.0
                        } else {
                            0.6 * (rng.random::<f64>() - 0.5)
                        }
                    })
                })
                .collect();
            let rf = reduced_form(&weights).unwrap();
            if spectral_radius(&rf).unwrap() < 0.95 {
                let noise: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
                return (rf, noise);
            }
        }
    }

    #[test]
    fn lyapunov_matches_vectorized_solve() {
        // vec(S) = (I - C⊗C)⁻¹ vec(Q) on the companion form.
        let (rf, noise) = random_stable_model(11, 2, 2);
        let n = rf.n();
        let c = rf.companion();
        let k = c.nrows();
        let m = &rf.mixing;
        let mut q = DMatrix::zeros(k, k);
        let sigma_u = m * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(noise.clone())) * m.transpose();
        q.view_mut((0, 0), (n, n)).copy_from(&sigma_u);
        let lhs = DMatrix::identity(k * k, k * k) - c.kronecker(&c);
        let vec_q = nalgebra::DVector::from_iterator(k * k, q.iter().copied());
        let vec_s = lhs.lu().solve(&vec_q).unwrap();
        let s = DMatrix::from_iterator(k, k, vec_s.iter().copied());
        let g = stationary_covariance(&rf, &noise).unwrap();
        for (w, gw) in g.iter().take(2).enumerate() {
            let block = s.view((0, w * n), (n, n));
            assert_relative_eq!(*gw, block.into_owned(), epsilon = 1e-10);
        }
    }

    #[test]
    fn yule_walker_residual_is_small() {
        for seed in 0..10 {
            let (rf, noise) = random_stable_model(100 + seed, 3, 3);
            let g = stationary_covariance(&rf, &noise).unwrap();
            let m = &rf.mixing;
            let sigma_u = m * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(noise.clone())) * m.transpose();
            let mut rhs = sigma_u;
            for (k, b) in rf.lags.iter().enumerate() {
                rhs += b * g[k + 1].transpose();
            }
            assert!((&g[0] - rhs).amax() < 1e-8);
            // Higher lags follow the same recursion.
            for w in 1..=3 {
                let mut pred = DMatrix::zeros(3, 3);
                for (k, b) in rf.lags.iter().enumerate() {
                    let tau = k + 1;
                    pred += if w >= tau { b * &g[w - tau] } else { b * g[tau - w].transpose() };
                }
                assert!((&g[w] - pred).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn unstable_process_has_no_covariance() {
        let rf = reduced_form(&ar(&[1.2])).unwrap();
        assert!(matches!(stationary_covariance(&rf, &[1.0]), Err(Error::Unstable { .. })));
        assert!(matches!(
            Svar::from_parts(ar(&[1.2]), vec![1.0], 1.0),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn generated_models_are_standardized() {
        let mut rng = from_seed(21);
        for _ in 0..50 {
            let g = crate::graph::gen_er_ts_graph(5, 0.3, 0.5, 2, &mut rng).unwrap();
            let m = gen_uumc_svar(&g, &mut rng).unwrap();
            assert!(m.spectral_radius() < 1.0);
            for (i, v) in m.implied_variance().iter().enumerate() {
                assert!((v - 1.0).abs() < 1e-8, "node {i}: {v}");
                assert!((m.lagged_cov()[0][(i, i)] - 1.0).abs() < 1e-10);
            }
            for tau in 0..=2 {
                for j in 0..5 {
                    for i in 0..5 {
                        if !g.has_edge(j, i, tau) {
                            assert_eq!(m.weights()[tau][(j, i)], 0.0);
                        }
                    }
                }
            }
            let sums = lag_sums(m.weights());
            assert!((sums - m.contributions()).amax() < 1e-10);
        }
    }

    #[test]
    fn empty_graph_is_pure_noise() {
        let g = TsGraph::empty(3, 2).unwrap();
        let m = gen_uumc_svar(&g, &mut from_seed(1)).unwrap();
        assert_eq!(m.noise_std(), &[1.0, 1.0, 1.0]);
        assert!(m.weights().iter().all(|w| w.amax() == 0.0));
    }

    #[test]
    fn contemporaneous_only_matches_static_single_edge() {
        let g = TsGraph::from_edges(2, 0, &[(0, 1, 0)]).unwrap();
        let mut draws = Scripted {
            normals: [vec![-1.5]].into(),
            radii: [0.6].into(),
            intervals: [1.3].into(),
            ..Default::default()
        };
        let m = gen_uumc_svar_with(&g, &mut draws).unwrap();
        assert_relative_eq!(m.weights()[0][(0, 1)], -0.6, epsilon = 1e-12);
        assert_relative_eq!(m.noise_std()[1], 0.8, epsilon = 1e-12);
        assert_relative_eq!(m.lagged_cov()[0][(0, 1)], -0.6, epsilon = 1e-12);
    }

    #[test]
    fn parent_contribution_examples() {
        let mut a1 = DMatrix::zeros(2, 2);
        a1[(0, 1)] = 0.4;
        let m = Svar::from_parts(vec![DMatrix::zeros(2, 2), a1], vec![1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(parent_contribution(&m, 0, 1).unwrap(), 0.4);
        assert_eq!(parent_contribution(&m, 1, 0), Err(Error::MissingEdge { from: 1, to: 0 }));

        let mut a0 = DMatrix::zeros(2, 2);
        a0[(0, 1)] = 0.3;
        let mut a1 = DMatrix::zeros(2, 2);
        a1[(0, 1)] = -0.1;
        let m = Svar::from_parts(vec![a0, a1], vec![1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(parent_contribution(&m, 0, 1).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn parent_contribution_matches_stored_contribution() {
        let mut rng = from_seed(8);
        let g = TsGraph::from_edges(3, 2, &[(0, 0, 1), (0, 1, 0), (0, 1, 2), (2, 1, 1), (1, 1, 1), (1, 2, 1)])
            .unwrap();
        for _ in 0..20 {
            let m = gen_uumc_svar(&g, &mut rng).unwrap();
            for &(j, i) in &[(0, 1), (2, 1), (1, 2)] {
                let c = parent_contribution(&m, j, i).unwrap();
                assert!((c - m.contributions()[(j, i)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn retries_are_bounded() {
        // A lag split with a tiny sum makes every draw explode.
        let g = TsGraph::from_edges(1, 2, &[(0, 0, 1), (0, 0, 2)]).unwrap();
        let mut draws = Scripted::default();
        for _ in 0..=MAX_REDRAWS {
            draws.intervals.push_back(1.0);
            draws.strengths.push_back(0.9);
            draws.normals.push_back(vec![1.0, -0.999]);
        }
        match gen_uumc_svar_with(&g, &mut draws) {
            Err(Error::RetriesExhausted { attempts, radius }) => {
                assert_eq!(attempts, MAX_REDRAWS + 1);
                assert!(radius >= 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(draws.intervals.is_empty());
    }

    #[test]
    fn sampling_interval_median_is_one() {
        let mut rng = from_seed(3);
        let mut draws = RngDraws(&mut rng);
        let mut xs: Vec<f64> = (0..10_000).map(|_| draws.sampling_interval()).collect();
        xs.sort_by(f64::total_cmp);
        let median = 0.5 * (xs[4999] + xs[5000]);
        assert!((median - 1.0).abs() < 0.05, "median {median}");
    }

    /// Lower branch of Lambert W on [-1/e, 0) by Halley iteration.
    fn lambert_w_minus1(z: f64) -> f64 {
        let mut w = if z < -0.25 {
            -1.0 - libm::sqrt(2.0 * (1.0 + core::f64::consts::E * z))
        } else {
            libm::log(-z) - libm::log(-libm::log(-z))
        };
        for _ in 0..100 {
            let ew = libm::exp(w);
            let f = w * ew - z;
            let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
            w -= step;
            if step.abs() < 1e-15 * w.abs() {
                break;
            }
        }
        w
    }

    #[test]
    fn confounding_bound_examples() {
        let d = confounding_bound(1.0, 2.0, 0.5).unwrap();
        assert!((d - 0.8392).abs() < 1e-4, "{d}");
        let shape = 1.0 - (2.0 * d + 1.0) * libm::exp(-2.0 * d);
        assert!((shape - 0.5).abs() < 1e-10);

        assert_eq!(confounding_bound(1.0, 2.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(confounding_bound(1.0, 2.0, 3.0).unwrap(), f64::INFINITY);

        let tiny = confounding_bound(1.0, 2.0, 1e-10).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-4);

        assert!(confounding_bound(0.0, 2.0, 0.5).is_err());
        assert!(confounding_bound(1.0, -2.0, 0.5).is_err());
        assert!(confounding_bound(1.0, 2.0, f64::NAN).is_err());
    }

    #[test]
    fn confounding_bound_matches_lambert_w() {
        for &(kappa, k12, p) in &[(1.0, 2.0, 0.5), (0.3, 0.5, 0.2), (2.0, 1.0, 0.01), (0.7, 3.0, 1.5)] {
            let q = 1.0 - 2.0 * kappa * p / k12;
            let oracle = -(lambert_w_minus1(-q / core::f64::consts::E) + 1.0) / (2.0 * kappa);
            let d = confounding_bound(kappa, k12, p).unwrap();
            assert_relative_eq!(d, oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn confounding_shape_series_agrees_with_closed_form() {
        for &x in &[0.1, 0.3, 0.49, 0.5, 0.51] {
            let direct = 1.0 - (1.0 + x) * libm::exp(-x);
            assert_relative_eq!(confounding_shape(x), direct, max_relative = 1e-12);
        }
    }
}

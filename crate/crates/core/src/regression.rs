//! Ordinary least squares with an intercept, used for R² metrics.
//!
//! A [`Design`] centers its columns once and caches the Gram matrix, so each
//! per-node regression only solves a sub-system. Near-singular systems fall
//! back to a ridge penalty of `1e-8 * trace(XᵀX) / k`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot threshold (on the unit-diagonal Gram) below which the
/// regression is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-12;
const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub r2: f64,
    /// The ridge fallback was used.
    pub ridge: bool,
}

#[derive(Debug, Clone)]
pub struct Design {
    columns: Vec<Vec<f64>>,
    gram: DMatrix<f64>,
}

impl Design {
    /// Builds a design from equally long columns, centering each one.
    pub fn new(mut columns: Vec<Vec<f64>>) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape("design columns differ in length".into()));
        }
        for col in &mut columns {
            let m = crate::stats::mean(col);
            col.iter_mut().for_each(|x| *x -= m);
        }
        let k = columns.len();
        let mut gram = DMatrix::zeros(k, k);
        for a in 0..k {
            for b in a..k {
                let v: f64 = columns[a].iter().zip(&columns[b]).map(|(x, y)| x * y).sum();
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
        }
        Ok(Design { columns, gram })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    /// R² of column `target` regressed on `regressors` (plus intercept).
    ///
    /// Computed as `1 - RSS / TSS` from explicit residuals. An empty
    /// regressor set gives 0. Errors if the target has zero variance.
    pub fn r2(&self, target: usize, regressors: &[usize]) -> Result<Fit> {
        let tss = self.gram[(target, target)];
        if tss <= 0.0 {
            return Err(Error::DegenerateData { column: target });
        }
        if regressors.is_empty() {
            return Ok(Fit { r2: 0.0, ridge: false });
        }
        let k = regressors.len();
        let g = DMatrix::from_fn(k, k, |a, b| self.gram[(regressors[a], regressors[b])]);
        let rhs = DVector::from_fn(k, |a, _| self.gram[(regressors[a], target)]);
        let (beta, ridge) = solve_normal_equations(g, rhs);

        let y = &self.columns[target];
        let mut rss = 0.0;
        for (row, &yr) in y.iter().enumerate() {
            let mut fitted = 0.0;
            for (a, &c) in regressors.iter().enumerate() {
                fitted += beta[a] * self.columns[c][row];
            }
            let e = yr - fitted;
            rss += e * e;
        }
        Ok(Fit { r2: 1.0 - rss / tss, ridge })
    }
}

fn solve_normal_equations(g: DMatrix<f64>, rhs: DVector<f64>) -> (DVector<f64>, bool) {
    let k = g.nrows();
    let diag: Vec<f64> = (0..k).map(|a| g[(a, a)]).collect();
    if diag.iter().all(|&d| d > 0.0) {
        // Judge conditioning on the correlation-scaled system.
        let scale: Vec<f64> = diag.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
        let scaled = DMatrix::from_fn(k, k, |a, b| g[(a, b)] * scale[a] * scale[b]);
        if let Some(chol) = scaled.cholesky() {
            let l = chol.l_dirty();
            let min_pivot = (0..k).map(|a| l[(a, a)] * l[(a, a)]).fold(f64::INFINITY, f64::min);
            if min_pivot > SINGULAR_PIVOT {
                let scaled_rhs = DVector::from_fn(k, |a, _| rhs[a] * scale[a]);
                let z = chol.solve(&scaled_rhs);
                return (DVector::from_fn(k, |a, _| z[a] * scale[a]), false);
            }
        }
    }
    let trace: f64 = diag.iter().sum();
    let lambda = RIDGE_SCALE * trace / k as f64;
    if lambda <= 0.0 {
        return (DVector::zeros(k), true);
    }
    let mut penalized = g;
    for a in 0..k {
        penalized[(a, a)] += lambda;
    }
    let beta = penalized
        .cholesky()
        .map(|c| c.solve(&rhs))
        .unwrap_or_else(|| DVector::zeros(k));
    (beta, true)
}

//! Kolmogorov-Smirnov helpers using the asymptotic critical values.

#![allow(dead_code)]

/// `c(α) = sqrt(-ln(α / 2) / 2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// One-sample statistic against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// True when the one-sample test does not reject at level `alpha`.
pub fn ks_one_sample_accepts(xs: &[f64], cdf: impl Fn(f64) -> f64, alpha: f64) -> bool {
    ks_one_sample(xs, cdf) < ks_coefficient(alpha) / (xs.len() as f64).sqrt()
}

/// Two-sample statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample_accepts(a: &[f64], b: &[f64], alpha: f64) -> bool {
    let (n, m) = (a.len() as f64, b.len() as f64);
    ks_two_sample(a, b) < ks_coefficient(alpha) * ((n + m) / (n * m)).sqrt()
}

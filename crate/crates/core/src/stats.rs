//! Small sample statistics used by metrics and experiment reports.

use alloc::vec;
use alloc::vec::Vec;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    libm::sqrt(sample_variance(xs))
}

/// Adjusted Fisher–Pearson standardized moment coefficient `G1`.
///
/// `G1 = g1 * sqrt(n (n - 1)) / (n - 2)` with `g1 = m3 / m2^{3/2}` using
/// biased central moments. NaN for fewer than three values or zero spread.
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 3 {
        return f64::NAN;
    }
    let nf = n as f64;
    let m = mean(xs);
    let (m2, m3) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - m;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / nf, m3 / nf);
    if m2 == 0.0 {
        return f64::NAN;
    }
    let g1 = m3 / libm::pow(m2, 1.5);
    g1 * libm::sqrt(nf * (nf - 1.0)) / (nf - 2.0)
}

/// Counts of `xs` in `bins` equal-width bins over `[lo, hi]`.
///
/// Values outside the range (and the right edge) are clamped into the end
/// bins, so the counts always sum to `xs.len()` for finite input. NaN values
/// are dropped.
pub fn histogram(xs: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    if bins == 0 {
        return counts;
    }
    let width = (hi - lo) / bins as f64;
    for &x in xs.iter().filter(|x| !x.is_nan()) {
        let k = libm::floor((x - lo) / width);
        let k = if k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
        counts[k] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn variance_of_small_sample() {
        assert_relative_eq!(sample_variance(&[1.0, 2.0, 3.0, 4.0]), 5.0 / 3.0);
    }

    #[test]
    fn skewness_matches_hand_value() {
        // m = 2.25, biased m2 = 2.6875, m3 = 4.21875
        let xs = [1.0, 1.0, 2.0, 5.0];
        let g1 = 4.21875 / libm::pow(2.6875, 1.5);
        let expected = g1 * libm::sqrt(12.0) / 2.0;
        assert_relative_eq!(skewness(&xs), expected, epsilon = 1e-12);
        assert_relative_eq!(skewness(&[1.0, 2.0, 3.0]), 0.0);
        assert!(skewness(&[-1.0, 0.0, 0.0, 0.0, 5.0]) > 0.0);
    }

    #[test]
    fn histogram_clamps_and_sums() {
        let xs = [-0.1, 0.0, 0.05, 0.5, 0.999, 1.0, 1.2];
        let h = histogram(&xs, 25, 0.0, 1.0);
        assert_eq!(h.iter().sum::<u64>(), xs.len() as u64);
        assert_eq!(h[0], 2);
        assert_eq!(h[12], 1);
        assert_eq!(h[24], 3);
    }
}

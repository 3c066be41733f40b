//! Sources of the random parameter draws used by the generators.
//!
//! Generators pull every random quantity through [`ParameterDraws`], so tests
//! can substitute fixed values for the otherwise random directions, radii,
//! auto-dependence strengths and sampling intervals.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, FisherF, StandardNormal};

pub trait ParameterDraws {
    /// `k` independent standard normals.
    fn normals(&mut self, k: usize) -> Vec<f64>;
    /// Ball radius for `d` coordinates: `r = u^{1/d}`, `u ~ U(0, 1)`.
    fn radius(&mut self, d: usize) -> f64;
    /// Raw auto-dependence strength `b' ~ U(0, 1)`.
    fn auto_strength(&mut self) -> f64;
    /// Sampling interval `Δ ~ F(100, 100)`.
    fn sampling_interval(&mut self) -> f64;
}

/// Draws from a random generator.
pub struct RngDraws<'a, R: ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> ParameterDraws for RngDraws<'_, R> {
    fn normals(&mut self, k: usize) -> Vec<f64> {
        (0..k).map(|_| StandardNormal.sample(self.0)).collect()
    }

    fn radius(&mut self, d: usize) -> f64 {
        let u: f64 = self.0.random();
        if d == 1 {
            u
        } else {
            libm::pow(u, 1.0 / d as f64)
        }
    }

    fn auto_strength(&mut self) -> f64 {
        self.0.random()
    }

    fn sampling_interval(&mut self) -> f64 {
        FisherF::new(100.0, 100.0)
            .expect("F(100, 100) is valid")
            .sample(self.0)
    }
}

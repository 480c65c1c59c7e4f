//! Tabulated inverse-CDF sampling for 1-d densities without a standard
//! direct sampler.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::numeric::KahanSum;

/// Piecewise-linear inverse-CDF table built from a nonnegative density on
/// a bounded interval (trapezoid accumulation over equally spaced knots).
#[derive(Clone, Debug)]
pub struct GridSampler1d {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
    total: f64,
}

impl GridSampler1d {
    pub fn from_density(f: impl Fn(f64) -> f64, lo: f64, hi: f64, knots: usize) -> Self {
        assert!(hi > lo && knots >= 2);
        let step = (hi - lo) / (knots - 1) as f64;
        let mut cdf = Vec::with_capacity(knots);
        let mut acc = KahanSum::new();
        let mut prev = f(lo).max(0.0);
        cdf.push(0.0);
        for i in 1..knots {
            let x = lo + i as f64 * step;
            let cur = f(x).max(0.0);
            acc.add(0.5 * (prev + cur) * step);
            cdf.push(acc.value());
            prev = cur;
        }
        let total = *cdf.last().unwrap();
        Self { lo, step, cdf, total }
    }

    /// Mass of the tabulated density (trapezoid approximation of ∫ f).
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let target = rng.random::<f64>() * self.total;
        // First index with cdf[idx] >= target.
        let idx = self.cdf.partition_point(|&c| c < target).max(1);
        let c0 = self.cdf[idx - 1];
        let c1 = self.cdf[idx];
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        self.lo + ((idx - 1) as f64 + frac) * self.step
    }
}

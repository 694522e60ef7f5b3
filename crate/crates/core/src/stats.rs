//! Small estimators shared by the Monte Carlo routines.

use serde::{Deserialize, Serialize};

use crate::matrix::C64;
use crate::rng::RandomSource;

/// Two-sided normal quantile for 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// `P(|Z| >= 4)` for a standard normal `Z`.
pub const FOUR_SIGMA_TAIL: f64 = 6.334_248_366_623_996e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate<T> {
    pub mean: T,
    /// Standard error of the mean.
    pub stderr: f64,
    pub samples: usize,
}

impl MeanEstimate<f64> {
    pub fn from_real(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

impl MeanEstimate<C64> {
    /// Standard error from the total variance `E|x - μ|²`.
    pub fn from_complex(xs: &[C64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<C64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// Success rate and 95% normal-approximation half-width.
pub fn binomial_ci(successes: usize, trials: usize) -> (f64, f64) {
    let p = successes as f64 / trials as f64;
    (p, Z95 * (p * (1.0 - p) / trials as f64).sqrt())
}

/// Binomial standard error `sqrt(p (1 - p) / n)`.
pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `P(|X - np| >= |observed - np|)` for `X ~ Binomial(n, p)`, summed exactly.
pub fn binomial_two_sided_tail(n: usize, p: f64, observed: usize) -> f64 {
    let mean = n as f64 * p;
    let dev = (observed as f64 - mean).abs();
    if p <= 0.0 {
        return if observed == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if observed == n { 1.0 } else { 0.0 };
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_choose = 0.0;
    let mut tail = 0.0;
    for k in 0..=n {
        if k > 0 {
            log_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if (k as f64 - mean).abs() >= dev - 1e-9 {
            tail += (log_choose + k as f64 * lp + (n - k) as f64 * lq).exp();
        }
    }
    tail.min(1.0)
}

/// Per-cell frequency check at the 4σ level.
///
/// A cell passes when its count is within four binomial standard deviations of
/// `n p`, or when the exact two-sided binomial tail of the deviation is at
/// least `P(|Z| >= 4)`. The second clause calibrates cells with small expected
/// counts, where the normal approximation is poor.
pub fn four_sigma_cell_ok(n: usize, p: f64, observed: usize) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    let dev = (observed as f64 - n as f64 * p).abs();
    dev <= 4.0 * sigma || binomial_two_sided_tail(n, p, observed) >= FOUR_SIGMA_TAIL
}

/// Percentile interval from bootstrap replicates.
pub fn percentile_interval(replicates: &mut [f64], level: f64) -> (f64, f64) {
    replicates.sort_by(f64::total_cmp);
    let n = replicates.len();
    let alpha = (1.0 - level) / 2.0;
    let at = |q: f64| {
        let pos = q * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        replicates[lo] * (1.0 - frac) + replicates[hi] * frac
    };
    (at(alpha), at(1.0 - alpha))
}

/// Indices for one bootstrap resample of `n` items.
pub fn resample_indices(n: usize, rng: &mut RandomSource) -> Vec<usize> {
    (0..n).map(|_| rng.below(n)).collect()
}

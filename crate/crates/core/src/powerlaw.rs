//! Maximum-likelihood fit of a discrete power-law tail
//! `P(k) = k^-alpha / zeta(alpha, k_min)` for `k >= k_min`, with `k_min`
//! chosen to minimise the Kolmogorov-Smirnov distance between the fitted
//! model and the empirical tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// B_2 .. B_12
const BERNOULLI: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Hurwitz zeta `sum_{k>=0} (q + k)^-s` for `s > 1`, `q > 0`, by
/// Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    const DIRECT: usize = 12;
    let mut sum: f64 = (0..DIRECT).map(|k| (q + k as f64).powf(-s)).sum();
    let a = q + DIRECT as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // term_j = B_2j / (2j)! * s (s+1) ... (s+2j-2) * a^(-s-2j+1)
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = a.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        sum += b / fact * rising * power;
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        power /= a * a;
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub k_min: usize,
    pub ks_distance: f64,
    pub n_tail: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Smallest tail size a candidate `k_min` may leave.
    pub min_tail: usize,
    pub alpha_range: (f64, f64),
    /// Upper truncation; larger values are discarded and the model is
    /// normalised on `k_min..=k_max`.
    pub k_max: Option<usize>,
    /// With `k_max` set, candidate `k_min` must satisfy
    /// `k_max >= min_range * k_min`.
    pub min_range: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            min_tail: 50,
            alpha_range: (1.0 + 1e-6, 8.0),
            k_max: None,
            min_range: 1.0,
        }
    }
}

/// Normaliser of `k^-alpha` over `k_min..=k_max`.
fn norm(alpha: f64, k_min: usize, k_max: Option<usize>) -> f64 {
    let head = hurwitz_zeta(alpha, k_min as f64);
    match k_max {
        Some(m) => head - hurwitz_zeta(alpha, (m + 1) as f64),
        None => head,
    }
}

fn mle_alpha(
    n: f64,
    sum_ln: f64,
    k_min: usize,
    k_max: Option<usize>,
    (mut lo, mut hi): (f64, f64),
) -> f64 {
    // log-likelihood is concave in alpha; golden-section search
    let ll = |a: f64| -n * norm(a, k_min, k_max).ln() - a * sum_ln;
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (ll(c), ll(d));
    while hi - lo > 1e-9 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = ll(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = ll(d);
        }
    }
    0.5 * (lo + hi)
}

/// KS distance between the empirical CDF of `tail` (sorted ascending) and
/// the fitted discrete power law.
fn ks_distance(tail: &[usize], alpha: f64, k_min: usize, k_max: Option<usize>) -> f64 {
    let total = norm(alpha, k_min, k_max);
    let n = tail.len() as f64;
    let mut worst: f64 = 0.0;
    let mut seen = 0usize;
    for group in tail.chunk_by(|a, b| a == b) {
        seen += group.len();
        let k = group[0];
        let model = 1.0 - norm(alpha, k + 1, k_max) / total;
        worst = worst.max((seen as f64 / n - model).abs());
    }
    worst
}

/// Fits the tail of a sample of positive integers.
pub fn fit_discrete(sample: &[usize], opts: FitOptions) -> Result<PowerLawFit> {
    let upper = opts.k_max.unwrap_or(usize::MAX);
    let mut data: Vec<usize> = sample
        .iter()
        .copied()
        .filter(|&k| k > 0 && k <= upper)
        .collect();
    data.sort_unstable();
    if data.len() < opts.min_tail.max(2) {
        return Err(Error::Fit(format!(
            "{} positive values, need at least {}",
            data.len(),
            opts.min_tail.max(2)
        )));
    }
    let ln: Vec<f64> = data.iter().map(|&k| (k as f64).ln()).collect();
    // suffix sums of ln k for O(1) tail statistics
    let mut suffix = vec![0.0; data.len() + 1];
    for i in (0..data.len()).rev() {
        suffix[i] = suffix[i + 1] + ln[i];
    }

    let distinct_total = data.chunk_by(|a, b| a == b).count();
    let mut best: Option<PowerLawFit> = None;
    let mut start = 0;
    let mut group = 0;
    while start < data.len() {
        let k_min = data[start];
        let n_tail = data.len() - start;
        if n_tail < opts.min_tail {
            break;
        }
        if opts
            .k_max
            .is_some_and(|m| (m as f64) < opts.min_range * k_min as f64)
        {
            break;
        }
        let tail = &data[start..];
        // fewer than three distinct degrees cannot distinguish a power law
        // from any other two-point shape
        if distinct_total - group >= 3 {
            let alpha = mle_alpha(
                n_tail as f64,
                suffix[start],
                k_min,
                opts.k_max,
                opts.alpha_range,
            );
            let ks = ks_distance(tail, alpha, k_min, opts.k_max);
            if best.is_none_or(|b| ks < b.ks_distance) {
                best = Some(PowerLawFit {
                    alpha,
                    k_min,
                    ks_distance: ks,
                    n_tail,
                });
            }
        }
        while start < data.len() && data[start] == k_min {
            start += 1;
        }
        group += 1;
    }
    best.ok_or_else(|| Error::Fit("degenerate sample: no tail with three distinct values".into()))
}

//! Synthetic series with known reversibility: white noise and unbiased
//! additive walks (reversible), biased or multiplicative walks
//! (irreversible in visibility-graph space) and fractional Brownian motion.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irreversibility::{window_irreversibility, DivergenceConfig};
use crate::powerlaw::{fit_discrete, FitOptions, PowerLawFit};
use crate::series::TimeSeries;
use crate::visibility::{degree_sequences, vg_build, GraphKind, VgAlgorithm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    WhiteNoise,
    AdditiveWalk,
    MultiplicativeWalk,
    Fbm,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratorKind::WhiteNoise => "white_noise",
            GeneratorKind::AdditiveWalk => "additive_walk",
            GeneratorKind::MultiplicativeWalk => "multiplicative_walk",
            GeneratorKind::Fbm => "fbm",
        })
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "white_noise" | "noise" => Ok(GeneratorKind::WhiteNoise),
            "additive_walk" | "walk" => Ok(GeneratorKind::AdditiveWalk),
            "multiplicative_walk" | "gbm" => Ok(GeneratorKind::MultiplicativeWalk),
            "fbm" => Ok(GeneratorKind::Fbm),
            other => Err(Error::Spec(format!("unknown generator kind `{other}`"))),
        }
    }
}

/// Generator parameters. `mu` is the per-step drift of the additive and
/// multiplicative walks, `sigma` the per-step log-volatility of the
/// multiplicative walk and `hurst` the Hurst exponent of fBm; each is
/// ignored by the kinds that have no use for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub length: usize,
    pub mu: f64,
    pub sigma: f64,
    pub hurst: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, length: usize, seed: u64) -> Self {
        Self {
            kind,
            length,
            mu: 0.0,
            sigma: 1.0,
            hurst: 0.5,
            seed,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_hurst(mut self, hurst: f64) -> Self {
        self.hurst = hurst;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::Spec(format!(
                "length must be >= 2, got {}",
                self.length
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::Spec(format!("mu must be finite, got {}", self.mu)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::Spec(format!(
                "sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.kind == GeneratorKind::Fbm && !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::Spec(format!(
                "hurst must lie in (0, 1), got {}",
                self.hurst
            )));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser applied to `seed + index`.
pub fn splitmix64(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussians(rng: &mut ChaCha8Rng, n: usize) -> impl Iterator<Item = f64> + '_ {
    (0..n).map(move |_| StandardNormal.sample(rng))
}

/// Autocovariance of unit-variance fractional Gaussian noise at `lag`.
pub fn fgn_autocovariance(hurst: f64, lag: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = lag as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// `n` samples of unit-variance fractional Gaussian noise by exact
/// circulant embedding (Davies-Harte).
pub fn fgn_davies_harte(hurst: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = n.next_power_of_two().max(2);
    let size = 2 * m;
    // first row of the 2m circulant: g(0..=m) then g(m-1..=1)
    let mut row: Vec<Complex<f64>> = (0..size)
        .map(|j| {
            let lag = if j <= m { j } else { size - j };
            Complex::new(fgn_autocovariance(hurst, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);

    let mut eig = Vec::with_capacity(size);
    for (j, c) in row.iter().enumerate() {
        let tol = 1e-9 * row[0].re.abs().max(1.0);
        if c.re < -tol {
            return Err(Error::Spec(format!(
                "circulant embedding not non-negative (eigenvalue {j} = {})",
                c.re
            )));
        }
        eig.push(c.re.max(0.0));
    }

    let mut w = vec![Complex::new(0.0, 0.0); size];
    let z: Vec<f64> = gaussians(rng, size).collect();
    let sm = size as f64;
    w[0] = Complex::new((eig[0] / sm).sqrt() * z[0], 0.0);
    w[m] = Complex::new((eig[m] / sm).sqrt() * z[1], 0.0);
    for j in 1..m {
        let scale = (eig[j] / (2.0 * sm)).sqrt();
        let v = Complex::new(scale * z[2 * j], scale * z[2 * j + 1]);
        w[j] = v;
        w[size - j] = v.conj();
    }
    fft.process(&mut w);
    Ok(w.iter().take(n).map(|c| c.re).collect())
}

/// Draws one series according to `spec`; identical specs give identical
/// series.
pub fn generate(spec: &GeneratorSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.length;
    let values: Vec<f64> = match spec.kind {
        GeneratorKind::WhiteNoise => gaussians(&mut rng, n).collect(),
        GeneratorKind::AdditiveWalk => {
            let mut x = 0.0;
            std::iter::once(0.0)
                .chain(gaussians(&mut rng, n - 1).map(|g| {
                    x += spec.mu + g;
                    x
                }))
                .collect()
        }
        GeneratorKind::MultiplicativeWalk => {
            let mut x = 1.0;
            std::iter::once(1.0)
                .chain(gaussians(&mut rng, n - 1).map(|g| {
                    x *= (spec.mu + spec.sigma * g).exp();
                    x
                }))
                .collect()
        }
        GeneratorKind::Fbm => {
            let noise = fgn_davies_harte(spec.hurst, n - 1, &mut rng)?;
            let mut x = 0.0;
            std::iter::once(0.0)
                .chain(noise.into_iter().map(|g| {
                    x += g;
                    x
                }))
                .collect()
        }
    };
    TimeSeries::new(spec.kind.to_string(), values, None)
}

/// Linear interpolation between order statistics of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub const BASELINE_LEVELS: [f64; 3] = [0.5, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullBaseline {
    pub model: GeneratorSpec,
    pub n: usize,
    pub trials: usize,
    pub graph: GraphKind,
    pub divergence: DivergenceConfig,
    /// Keyed by level as printed (`"0.5"`, `"0.95"`, `"0.99"`).
    pub quantiles: BTreeMap<String, f64>,
}

impl NullBaseline {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.get(&level.to_string()).copied()
    }
}

/// Irreversibility of `trials` independent length-`n` draws of `spec`.
/// Trial `i` uses seed `splitmix64(spec.seed, i)`; the output is in trial
/// order regardless of scheduling.
pub fn trial_values(
    spec: &GeneratorSpec,
    n: usize,
    trials: usize,
    kind: GraphKind,
    cfg: DivergenceConfig,
) -> Result<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let trial = GeneratorSpec {
                length: n,
                seed: splitmix64(spec.seed, i as u64),
                ..*spec
            };
            let s = generate(&trial)?;
            window_irreversibility(s.values(), kind, cfg)
        })
        .collect()
}

pub fn baseline(
    spec: &GeneratorSpec,
    n: usize,
    trials: usize,
    kind: GraphKind,
    cfg: DivergenceConfig,
) -> Result<NullBaseline> {
    if trials < 30 {
        return Err(Error::Spec(format!(
            "need at least 30 trials, got {trials}"
        )));
    }
    let mut values = trial_values(spec, n, trials, kind, cfg)?;
    values.sort_by(f64::total_cmp);
    let quantiles = BASELINE_LEVELS
        .iter()
        .map(|&l| (l.to_string(), quantile_sorted(&values, l)))
        .collect();
    Ok(NullBaseline {
        model: GeneratorSpec { length: n, ..*spec },
        n,
        trials,
        graph: kind,
        divergence: cfg,
        quantiles,
    })
}

/// Power-law fit of the undirected VG degree distribution of `s`, on
/// degrees up to the 99th percentile with `k_min <= k_max / 5`.
pub fn vg_tail_fit(s: &TimeSeries) -> Result<PowerLawFit> {
    if s.len() < 1 << 12 {
        return Err(Error::Size(format!(
            "tail fit needs at least 4096 points, got {}",
            s.len()
        )));
    }
    let g = vg_build(s.values(), VgAlgorithm::DivideAndConquer)?;
    let degrees = degree_sequences(&g).total();
    let mut sorted = degrees.clone();
    sorted.sort_unstable();
    // drop the finite-size cutoff and require some scaling range below it
    let k_max = sorted[(sorted.len() - 1) * 99 / 100];
    let opts = FitOptions {
        k_max: Some(k_max),
        min_range: 5.0,
        ..FitOptions::default()
    };
    fit_discrete(&degrees, opts)
}

/// Fitted tail exponent of the VG degree distribution; `3 - 2H` is
/// expected for fBm with Hurst exponent `H`.
pub fn vg_tail_exponent(s: &TimeSeries) -> Result<f64> {
    vg_tail_fit(s).map(|f| f.alpha)
}

//! Divergences between in- and out-degree distributions and the per-window
//! and per-year irreversibility profiles built from them.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{partition_years, windows_of, TimeSeries};
use crate::visibility::{
    self, degree_distribution, degree_sequences, DegreeDistribution, GraphKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Kld,
    L1,
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DivergenceKind::Kld => "kld",
            DivergenceKind::L1 => "l1",
        })
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kld" => Ok(DivergenceKind::Kld),
            "l1" => Ok(DivergenceKind::L1),
            other => Err(Error::Config(format!("unknown divergence `{other}`"))),
        }
    }
}

/// Zero-frequency handling for the KLD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bias {
    /// Plain KLD; fails when `q` vanishes where `p` does not.
    None,
    /// Zero masses on the union support become `1/n`, then both
    /// distributions are renormalized.
    OneOverN(usize),
    /// [`Bias::OneOverN`] with `n` set to the length of the window the
    /// distributions were measured on.
    OneOverWindow,
}

impl Bias {
    fn resolve(self, window_len: usize) -> Bias {
        match self {
            Bias::OneOverWindow => Bias::OneOverN(window_len),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DivergenceConfig {
    pub kind: DivergenceKind,
    pub bias: Bias,
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        Self {
            kind: DivergenceKind::Kld,
            bias: Bias::OneOverWindow,
        }
    }
}

/// Walks the union of two supports in ascending order, yielding
/// `(degree, p(degree), q(degree))` with zeros where a side is absent.
fn union_support<'a>(
    p: &'a DegreeDistribution,
    q: &'a DegreeDistribution,
) -> impl Iterator<Item = (usize, f64, f64)> + 'a {
    let mut a = p.iter().peekable();
    let mut b = q.iter().peekable();
    std::iter::from_fn(move || match (a.peek().copied(), b.peek().copied()) {
        (None, None) => None,
        (Some(x), None) => a.next().map(|_| (x.0, x.1, 0.0)),
        (None, Some(y)) => b.next().map(|_| (y.0, 0.0, y.1)),
        (Some(x), Some(y)) => match x.0.cmp(&y.0) {
            Ordering::Less => a.next().map(|_| (x.0, x.1, 0.0)),
            Ordering::Greater => b.next().map(|_| (y.0, 0.0, y.1)),
            Ordering::Equal => {
                a.next();
                b.next();
                Some((x.0, x.1, y.1))
            }
        },
    })
}

/// Kullback-Leibler divergence `sum p ln(p / q)` in nats.
pub fn kld(p: &DegreeDistribution, q: &DegreeDistribution, bias: Bias) -> Result<f64> {
    let d = match bias {
        Bias::None => {
            let mut d = 0.0;
            for (k, pk, qk) in union_support(p, q) {
                if pk == 0.0 {
                    continue;
                }
                if qk == 0.0 {
                    return Err(Error::DivergenceInfinite { degree: k });
                }
                d += pk * (pk / qk).ln();
            }
            d
        }
        Bias::OneOverN(n) => {
            if n < 2 {
                return Err(Error::Config(format!("bias needs n >= 2, got {n}")));
            }
            let floor = 1.0 / n as f64;
            let filled: Vec<(f64, f64)> = union_support(p, q)
                .map(|(_, pk, qk)| {
                    (
                        if pk == 0.0 { floor } else { pk },
                        if qk == 0.0 { floor } else { qk },
                    )
                })
                .collect();
            let p_total: f64 = filled.iter().map(|f| f.0).sum();
            let q_total: f64 = filled.iter().map(|f| f.1).sum();
            filled
                .iter()
                .map(|&(pk, qk)| {
                    let (pk, qk) = (pk / p_total, qk / q_total);
                    pk * (pk / qk).ln()
                })
                .sum()
        }
        Bias::OneOverWindow => {
            return Err(Error::Config(
                "window-sized bias needs a window; use Bias::OneOverN".into(),
            ))
        }
    };
    // Gibbs: only rounding can push the sum below zero.
    Ok(d.max(0.0))
}

/// `sum |p - q|` over the union support.
pub fn l1_divergence(p: &DegreeDistribution, q: &DegreeDistribution) -> f64 {
    union_support(p, q).map(|(_, a, b)| (a - b).abs()).sum()
}

/// Dispatches on `cfg.kind`; the bias only applies to the KLD.
pub fn divergence(
    p: &DegreeDistribution,
    q: &DegreeDistribution,
    cfg: DivergenceConfig,
) -> Result<f64> {
    match cfg.kind {
        DivergenceKind::Kld => kld(p, q, cfg.bias),
        DivergenceKind::L1 => Ok(l1_divergence(p, q)),
    }
}

/// In- and out-degree distributions of the directed graph of `kind` on `x`.
pub fn in_out_distributions(
    x: &[f64],
    kind: GraphKind,
) -> Result<(DegreeDistribution, DegreeDistribution)> {
    let g = visibility::build(x, kind)?;
    let d = degree_sequences(&g);
    Ok((
        degree_distribution(&d.k_in)?,
        degree_distribution(&d.k_out)?,
    ))
}

/// Irreversibility of one window: `D(P_in || P_out)`.
pub fn window_irreversibility(x: &[f64], kind: GraphKind, cfg: DivergenceConfig) -> Result<f64> {
    let (p_in, p_out) = in_out_distributions(x, kind)?;
    let cfg = DivergenceConfig {
        bias: cfg.bias.resolve(x.len()),
        ..cfg
    };
    divergence(&p_in, &p_out, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Window,
    Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    /// Window index or calendar year.
    pub key: i64,
    pub value: f64,
}

/// Irreversibility values of one entity, ordered by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreversibilityProfile {
    pub entity: String,
    pub granularity: Granularity,
    pub points: Vec<ProfilePoint>,
}

impl IrreversibilityProfile {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn get(&self, key: i64) -> Option<f64> {
        self.points
            .binary_search_by_key(&key, |p| p.key)
            .ok()
            .map(|i| self.points[i].value)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

fn window_values(x: &[f64], n: usize, kind: GraphKind, cfg: DivergenceConfig) -> Result<Vec<f64>> {
    windows_of(x, n)?
        .par_iter()
        .map(|w| window_irreversibility(w.values(), kind, cfg))
        .collect()
}

/// One value per non-overlapping window of size `n`, in order.
pub fn irreversibility_profile(
    s: &TimeSeries,
    n: usize,
    kind: GraphKind,
    cfg: DivergenceConfig,
) -> Result<IrreversibilityProfile> {
    if s.len() < n {
        return Err(Error::InsufficientData(format!(
            "`{}` has {} points, window size is {n}",
            s.entity_id(),
            s.len()
        )));
    }
    let points = window_values(s.values(), n, kind, cfg)?
        .into_iter()
        .enumerate()
        .map(|(i, value)| ProfilePoint {
            key: i as i64,
            value,
        })
        .collect();
    Ok(IrreversibilityProfile {
        entity: s.entity_id().to_string(),
        granularity: Granularity::Window,
        points,
    })
}

/// Per calendar year, the mean irreversibility over the complete windows
/// that fit inside that year. Years without a complete window are omitted.
pub fn annual_irreversibility(
    s: &TimeSeries,
    n: usize,
    kind: GraphKind,
    cfg: DivergenceConfig,
) -> Result<IrreversibilityProfile> {
    let mut points = Vec::new();
    for (year, sub) in partition_years(s)? {
        let values = window_values(sub.values(), n, kind, cfg)?;
        if values.is_empty() {
            continue;
        }
        points.push(ProfilePoint {
            key: i64::from(year),
            value: values.iter().sum::<f64>() / values.len() as f64,
        });
    }
    Ok(IrreversibilityProfile {
        entity: s.entity_id().to_string(),
        granularity: Granularity::Year,
        points,
    })
}

/// `entity,key,value` rows for any number of profiles.
pub fn profiles_to_csv<'a, I>(profiles: I) -> Result<String>
where
    I: IntoIterator<Item = &'a IrreversibilityProfile>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["entity", "key", "value"])?;
    for p in profiles {
        for pt in &p.points {
            w.write_record([
                p.entity.as_str(),
                &pt.key.to_string(),
                &pt.value.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

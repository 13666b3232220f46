//! Synthetic multi-year price panels.

#![allow(dead_code)]

use chrono::NaiveDate;
use irrevis::nullmodels::{generate, splitmix64, GeneratorKind, GeneratorSpec};
use irrevis::TimeSeries;

/// Smallest drift (at this volatility) whose window values clear the walk
/// null: GBM 5th percentile above the walk 95th percentile at n = 5000.
pub const GBM_MU: f64 = 1e-3;
pub const GBM_SIGMA: f64 = 0.01;

fn year_start(year: i32) -> i64 {
    NaiveDate::from_ymd_opt(year, 1, 1)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc()
        .timestamp()
}

/// One entity: `per_year` minute-spaced prices in each of `years`. Years in
/// `crisis` follow a GBM, the others an unbiased additive walk on the price
/// level. Each year continues from the previous year's last price.
pub fn entity(id: &str, years: &[i32], per_year: usize, crisis: &[i32], seed: u64) -> TimeSeries {
    let mut values = Vec::with_capacity(years.len() * per_year);
    let mut ts = Vec::with_capacity(years.len() * per_year);
    let mut last = 100.0;
    for (k, &year) in years.iter().enumerate() {
        let seed = splitmix64(seed, k as u64);
        let segment: Vec<f64> = if crisis.contains(&year) {
            let spec = GeneratorSpec::new(GeneratorKind::MultiplicativeWalk, per_year + 1, seed)
                .with_mu(GBM_MU)
                .with_sigma(GBM_SIGMA);
            generate(&spec).unwrap().values()[1..]
                .iter()
                .map(|v| last * v)
                .collect()
        } else {
            let spec = GeneratorSpec::new(GeneratorKind::AdditiveWalk, per_year + 1, seed);
            let step = 1e-3 * last;
            generate(&spec).unwrap().values()[1..]
                .iter()
                .map(|v| last + step * v)
                .collect()
        };
        last = *segment.last().unwrap();
        let t0 = year_start(year);
        ts.extend((0..per_year).map(|i| t0 + 60 * i as i64));
        values.extend(segment);
    }
    TimeSeries::prices(id, values, Some(ts)).unwrap()
}

/// `entities` series over `years`, entity `i` seeded from `(seed, i)`.
pub fn panel(
    entities: usize,
    years: &[i32],
    per_year: usize,
    crisis: &[i32],
    seed: u64,
) -> Vec<TimeSeries> {
    (0..entities)
        .map(|i| {
            entity(
                &format!("E{i:02}"),
                years,
                per_year,
                crisis,
                splitmix64(seed, 1000 + i as u64),
            )
        })
        .collect()
}

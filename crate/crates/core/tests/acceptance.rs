//! Acceptance criteria, run in order with one PASS/FAIL line each.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use irrevis::analytics::{cluster_complete, irr_variance, pca, pearson_r2, score, FeatureMatrix};
use irrevis::irreversibility::{kld, l1_divergence, Granularity, ProfilePoint};
use irrevis::nullmodels::{
    baseline, generate, splitmix64, vg_tail_exponent, GeneratorKind, GeneratorSpec,
};
use irrevis::pipeline::{analyze_series, write_artifacts, AnalysisConfig};
use irrevis::series::reverse;
use irrevis::visibility::{
    degree_distribution, degree_sequences, hvg_build, vg_build, HvgAlgorithm, VgAlgorithm,
};
use irrevis::{
    Bias, DegreeDistribution, DivergenceConfig, Error, GraphKind, IrreversibilityProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("{what} took {elapsed:.2?}, limit {limit:.0?}"),
    )
}

/// Gaussian noise, random walks and fBm in rotation, lengths 16..=512.
fn random_series(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let len = rng.random_range(16..=512);
            let kind = [
                GeneratorKind::WhiteNoise,
                GeneratorKind::AdditiveWalk,
                GeneratorKind::Fbm,
            ][i % 3];
            let hurst = rng.random_range(0.2..0.9);
            let spec = GeneratorSpec::new(kind, len, rng.random()).with_hurst(hurst);
            generate(&spec).unwrap().into_values()
        })
        .collect()
}

fn edges(g: &irrevis::DirectedVisibilityGraph) -> Vec<(usize, usize)> {
    g.edges().collect()
}

fn c1_fast_equals_naive() -> Outcome {
    let start = Instant::now();
    let series = random_series(200, 1);
    for (i, x) in series.iter().enumerate() {
        let naive = vg_build(x, VgAlgorithm::Naive).unwrap();
        let dc = vg_build(x, VgAlgorithm::DivideAndConquer).unwrap();
        check(
            edges(&naive) == edges(&dc),
            format!("VG mismatch on series {i}"),
        )?;
        let naive = hvg_build(x, HvgAlgorithm::Naive).unwrap();
        let stack = hvg_build(x, HvgAlgorithm::Stack).unwrap();
        check(
            edges(&naive) == edges(&stack),
            format!("HVG mismatch on series {i}"),
        )?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10), "200 series")?;
    Ok(format!("200 series identical in {elapsed:.2?}"))
}

fn c2_hvg_subset_of_vg() -> Outcome {
    let mut total = 0;
    for (i, x) in random_series(200, 2).iter().enumerate() {
        let vg = vg_build(x, VgAlgorithm::DivideAndConquer).unwrap();
        let hvg = hvg_build(x, HvgAlgorithm::Stack).unwrap();
        for (a, b) in hvg.edges() {
            check(
                vg.has_edge(a, b),
                format!("series {i}: HVG edge {a}->{b} not in VG"),
            )?;
            total += 1;
        }
    }
    Ok(format!("{total} HVG edges all present in VG"))
}

fn c3_invariance() -> Outcome {
    let series = random_series(100, 3);
    for (i, x) in series.iter().enumerate() {
        let vg = edges(&vg_build(x, VgAlgorithm::DivideAndConquer).unwrap());
        for a in [0.5, 3.0] {
            for b in [-7.0, 100.0] {
                let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let g = edges(&vg_build(&y, VgAlgorithm::DivideAndConquer).unwrap());
                check(g == vg, format!("series {i}: VG changed under {a}x{b:+}"))?;
            }
        }
        let hvg = edges(&hvg_build(x, HvgAlgorithm::Stack).unwrap());
        let cube: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        let exp: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        check(
            edges(&hvg_build(&cube, HvgAlgorithm::Stack).unwrap()) == hvg,
            format!("series {i}: HVG changed under x^3"),
        )?;
        check(
            edges(&hvg_build(&exp, HvgAlgorithm::Stack).unwrap()) == hvg,
            format!("series {i}: HVG changed under exp"),
        )?;
    }
    Ok("100 series: VG affine-invariant, HVG monotone-invariant".into())
}

fn in_out(x: &[f64], kind: GraphKind) -> (DegreeDistribution, DegreeDistribution) {
    let g = irrevis::visibility::build(x, kind).unwrap();
    let d = degree_sequences(&g);
    (
        degree_distribution(&d.k_in).unwrap(),
        degree_distribution(&d.k_out).unwrap(),
    )
}

fn c4_reversal_identity() -> Outcome {
    let series = random_series(100, 4);
    for (i, x) in series.iter().enumerate() {
        let s = irrevis::TimeSeries::new("w", x.clone(), None).unwrap();
        let r = reverse(&s);
        for kind in [GraphKind::Vg, GraphKind::Hvg] {
            let (p_in, _) = in_out(s.values(), kind);
            let (_, q_out) = in_out(r.values(), kind);
            check(
                p_in == q_out,
                format!("window {i}, {kind}: P_in[S] != P_out[rev S]"),
            )?;
        }
    }
    Ok("100 windows, VG and HVG, exact equality".into())
}

fn dist(pairs: &[(usize, f64)]) -> DegreeDistribution {
    DegreeDistribution::from_pairs(pairs.to_vec()).unwrap()
}

fn c5_divergence() -> Outcome {
    let p = dist(&[(0, 0.2), (1, 0.6), (3, 0.2)]);
    let q = dist(&[(0, 0.2), (1, 0.4), (2, 0.4)]);
    for b in [Bias::None, Bias::OneOverN(5)] {
        let d = kld(&p, &p, b).unwrap();
        check(d == 0.0, format!("KLD(p,p) = {d} with {b:?}"))?;
    }
    let biased = kld(&p, &q, Bias::OneOverN(5)).unwrap();
    let want = 0.5 * 1.5f64.ln() + (0.5f64).ln() / 6.0;
    check(
        (biased - 0.0872).abs() <= 1e-4,
        format!("biased KLD {biased}"),
    )?;
    check(
        (biased - want).abs() <= 1e-12,
        format!("biased KLD {biased} vs {want}"),
    )?;
    let l1 = l1_divergence(&p, &q);
    check(l1 == 0.8, format!("l1 = {l1}"))?;
    check(
        matches!(
            kld(&p, &q, Bias::None),
            Err(Error::DivergenceInfinite { .. })
        ),
        "bias=none accepted a support violation",
    )?;
    Ok(format!(
        "KLD(p,p)=0, biased {biased:.6}, l1 {l1}, support error raised"
    ))
}

fn c6_null_models() -> Outcome {
    let start = Instant::now();
    let cfg = DivergenceConfig::default();
    let walk = GeneratorSpec::new(GeneratorKind::AdditiveWalk, 0, 61);
    let small = baseline(&walk, 500, 100, GraphKind::Vg, cfg).unwrap();
    let large = baseline(&walk, 5000, 100, GraphKind::Vg, cfg).unwrap();
    let gbm = GeneratorSpec::new(GeneratorKind::MultiplicativeWalk, 0, 62)
        .with_mu(5e-4)
        .with_sigma(0.01);
    let mult = baseline(&gbm, 5000, 100, GraphKind::Vg, cfg).unwrap();
    let elapsed = start.elapsed();
    let (m500, m5000) = (small.quantile(0.5).unwrap(), large.quantile(0.5).unwrap());
    let (p95, gbm_med) = (large.quantile(0.95).unwrap(), mult.quantile(0.5).unwrap());
    check(
        m5000 < m500,
        format!("walk median {m500} (500) -> {m5000} (5000)"),
    )?;
    check(
        gbm_med > p95,
        format!("GBM median {gbm_med} <= walk p95 {p95}"),
    )?;
    within(elapsed, Duration::from_secs(300), "baselines")?;
    Ok(format!(
        "walk median {m500:.4} -> {m5000:.4}; GBM median {gbm_med:.4} > walk p95 {p95:.4}; {elapsed:.1?}"
    ))
}

fn c7_fbm_tail() -> Outcome {
    let start = Instant::now();
    let mut means = Vec::new();
    for (hurst, target) in [(0.5, 2.0), (0.8, 1.4)] {
        let fits: Vec<f64> = (0..20u64)
            .map(|seed| {
                let spec =
                    GeneratorSpec::new(GeneratorKind::Fbm, 1 << 14, 700 + seed).with_hurst(hurst);
                vg_tail_exponent(&generate(&spec).unwrap()).unwrap()
            })
            .collect();
        let mean = fits.iter().sum::<f64>() / fits.len() as f64;
        check(
            (mean - target).abs() <= 0.3,
            format!("H={hurst}: mean exponent {mean:.3}, expected {target} +- 0.3"),
        )?;
        means.push(format!("H={hurst}: {mean:.3} (target {target})"));
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(600), "tail fits")?;
    Ok(format!("{}; {elapsed:.1?}", means.join(", ")))
}

/// Neumaier-compensated sum.
fn oracle_sum(x: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in x {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

fn oracle_mean(x: &[f64]) -> f64 {
    oracle_sum(x) / x.len() as f64
}

fn oracle_var(x: &[f64]) -> f64 {
    let m = oracle_mean(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    oracle_mean(&dev)
}

fn oracle_r2(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (oracle_mean(x), oracle_mean(y));
    let sxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let cov = oracle_mean(&sxy);
    cov * cov / (oracle_var(x) * oracle_var(y))
}

fn annual(values: &[f64]) -> IrreversibilityProfile {
    IrreversibilityProfile {
        entity: "X".into(),
        granularity: Granularity::Year,
        points: values
            .iter()
            .enumerate()
            .map(|(i, &value)| ProfilePoint {
                key: 1998 + i as i64,
                value,
            })
            .collect(),
    }
}

fn c8_analytics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let len = rng.random_range(3..40);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..0.5)).collect();
        let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(-0.2..0.2)).collect();
        let p = annual(&x);
        worst = worst
            .max((score(&p).unwrap() - oracle_mean(&x)).abs())
            .max((irr_variance(&p).unwrap() - oracle_var(&x)).abs())
            .max((pearson_r2(&x, &y).unwrap() - oracle_r2(&x, &y)).abs());
    }
    check(
        worst <= 1e-12,
        format!("max deviation from oracle {worst:e}"),
    )?;

    let labels = |n: usize| (0..n).map(|i| format!("r{i}")).collect::<Vec<_>>();
    for _ in 0..50 {
        let (r, c) = (rng.random_range(3..16), rng.random_range(2..36));
        let rows: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..c).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let fm = FeatureMatrix::new(labels(r), labels(c), rows).unwrap();
        for standardize in [false, true] {
            let res = pca(&fm, (r - 1).min(c), standardize).unwrap();
            let total: f64 = res.explained_variance_ratio.iter().sum();
            check(
                (total - 1.0).abs() <= 1e-9,
                format!("PCA ratios sum to {total}"),
            )?;
        }
    }
    let dir = [0.3, -1.2, 0.7, 2.0];
    let rows = (0..7)
        .map(|i| {
            dir.iter()
                .map(|d| (i as f64 * 0.37 - 1.0) * d + 5.0)
                .collect()
        })
        .collect();
    let res = pca(
        &FeatureMatrix::new(labels(7), labels(4), rows).unwrap(),
        2,
        false,
    )
    .unwrap();
    let first = res.explained_variance_ratio[0];
    check(
        (first - 1.0).abs() <= 1e-9,
        format!("rank-1 first ratio {first}"),
    )?;

    let pts = [0.0, 1.0, 10.0, 11.0];
    let d: Vec<Vec<f64>> = pts
        .iter()
        .map(|a| pts.iter().map(|b| f64::abs(a - b)).collect())
        .collect();
    let names: Vec<String> = ["p0", "p1", "p10", "p11"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let dg = cluster_complete(&d, &names).unwrap();
    let merges: Vec<(usize, usize, f64)> = dg
        .merges
        .iter()
        .map(|m| (m.left, m.right, m.height))
        .collect();
    check(
        merges == [(0, 1, 1.0), (2, 3, 1.0), (4, 5, 11.0)],
        format!("dendrogram {merges:?}"),
    )?;
    Ok(format!(
        "oracle deviation {worst:.1e}; PCA sums and rank-1 ok; dendrogram exact"
    ))
}

const YEARS: std::ops::RangeInclusive<i32> = 1998..=2012;
const CRISIS: [i32; 3] = [2000, 2008, 2009];
const PER_YEAR: usize = 6667;

fn crisis_panel(seed: u64) -> Vec<irrevis::TimeSeries> {
    let years: Vec<i32> = YEARS.collect();
    common::panel(35, &years, PER_YEAR, &CRISIS, seed)
}

fn crisis_separated(dg: &irrevis::analytics::Dendrogram) -> bool {
    let want: Vec<usize> = dg
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| CRISIS.iter().any(|c| c.to_string() == **l))
        .map(|(i, _)| i)
        .collect();
    dg.clusters().contains(&want)
}

fn c9_cluster_recovery() -> Outcome {
    let cfg = AnalysisConfig::default();
    let mut hits = 0;
    let mut misses = Vec::new();
    for rep in 0..10u64 {
        let panel = crisis_panel(splitmix64(9, rep));
        let a = analyze_series(&panel, &cfg).unwrap();
        if crisis_separated(&a.dendrogram) {
            hits += 1;
        } else {
            misses.push(rep);
        }
    }
    check(hits >= 9, format!("{hits}/10 separated; missed {misses:?}"))?;
    Ok(format!(
        "crisis years form their own branch in {hits}/10 panels"
    ))
}

fn c10_performance() -> Outcome {
    let walk = generate(&GeneratorSpec::new(GeneratorKind::AdditiveWalk, 5000, 10)).unwrap();
    let mut times: Vec<Duration> = (0..7)
        .map(|_| {
            let t = Instant::now();
            let g = vg_build(walk.values(), VgAlgorithm::DivideAndConquer).unwrap();
            std::hint::black_box(g.n_edges());
            t.elapsed()
        })
        .collect();
    times.sort();
    let vg = times[times.len() / 2];
    within(vg, Duration::from_millis(50), "VG n=5000 (median of 7)")?;

    let t = Instant::now();
    let panel = crisis_panel(10);
    let a = analyze_series(&panel, &AnalysisConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let refs: Vec<&irrevis::TimeSeries> = panel.iter().collect();
    write_artifacts(
        &a,
        &refs,
        &AnalysisConfig::default(),
        serde_json::json!({}),
        dir.path(),
    )
    .unwrap();
    let pipeline = t.elapsed();
    within(pipeline, Duration::from_secs(60), "35x15 pipeline")?;
    Ok(format!("VG n=5000 {vg:.2?}; full pipeline {pipeline:.1?}"))
}

fn run_to_dir(panel: &[irrevis::TimeSeries], threads: usize) -> BTreeMap<String, Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let cfg = AnalysisConfig::default();
    let a = pool.install(|| analyze_series(panel, &cfg)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let refs: Vec<&irrevis::TimeSeries> = panel.iter().collect();
    let paths = write_artifacts(&a, &refs, &cfg, serde_json::json!({}), dir.path()).unwrap();
    paths
        .into_iter()
        .map(|p| {
            let rel = p.strip_prefix(dir.path()).unwrap().display().to_string();
            (rel, std::fs::read(&p).unwrap())
        })
        .collect()
}

fn c11_determinism() -> Outcome {
    let panel = crisis_panel(splitmix64(9, 0));
    let one = run_to_dir(&panel, 1);
    let again = run_to_dir(&panel, 1);
    let eight = run_to_dir(&panel, 8);
    check(one == again, "outputs differ between runs")?;
    check(one == eight, "outputs differ between 1 and 8 threads")?;
    Ok(format!(
        "{} files byte-identical across runs and 1/8 threads",
        one.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("fast VG/HVG equal naive", c1_fast_equals_naive),
        ("HVG subset of VG", c2_hvg_subset_of_vg),
        ("graph invariances", c3_invariance),
        ("in/out reversal identity", c4_reversal_identity),
        ("divergence examples", c5_divergence),
        ("null-model baselines", c6_null_models),
        ("fBm VG tail exponent", c7_fbm_tail),
        ("analytics vs oracle", c8_analytics),
        ("crisis-year cluster recovery", c9_cluster_recovery),
        ("performance", c10_performance),
        ("determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

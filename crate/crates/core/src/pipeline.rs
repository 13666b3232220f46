//! End-to-end analysis of a multi-entity price panel and the flat-file
//! artifacts written by `irrevis analyze`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::analytics::{
    cluster_complete, distance_matrix, irr_variance, pca, pearson_r2, rank_entities,
    reports_to_csv, score, CompanyReport, Dendrogram, FeatureMatrix, PcaResult,
};
use crate::error::{Error, Result};
use crate::irreversibility::{
    annual_irreversibility, irreversibility_profile, profiles_to_csv, Bias, DivergenceConfig,
    DivergenceKind, IrreversibilityProfile,
};
use crate::series::{
    annualized_volatility, parse_price_csv, partition_years, CsvOptions, TimeSeries,
};
use crate::visibility::GraphKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub graph: GraphKind,
    pub divergence: DivergenceKind,
    /// `true` for the 1/n zero-frequency rule with n the window size.
    pub bias: bool,
    pub window: usize,
    pub components: usize,
    pub standardize: bool,
    /// Plot series keep every `plot_every`-th observation.
    pub plot_every: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            graph: GraphKind::Vg,
            divergence: DivergenceKind::Kld,
            bias: true,
            window: 5000,
            components: 2,
            standardize: false,
            plot_every: 1000,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::Config(format!(
                "window size must be >= 2, got {}",
                self.window
            )));
        }
        if self.components < 1 {
            return Err(Error::Config("need at least one PCA component".into()));
        }
        if self.plot_every < 1 {
            return Err(Error::Config("plot stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn divergence_config(&self) -> DivergenceConfig {
        DivergenceConfig {
            kind: self.divergence,
            bias: if self.bias {
                Bias::OneOverN(self.window)
            } else {
                Bias::None
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub analysis: AnalysisConfig,
    pub csv: CsvOptions,
    /// Recorded in the summary; the analysis itself draws no random numbers.
    pub seed: u64,
    /// `None` uses every available core.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityResult {
    pub windows: IrreversibilityProfile,
    pub annual: IrreversibilityProfile,
    /// `(year, volatility)` for every year where it is defined.
    pub volatility: Vec<(i32, f64)>,
    pub report: CompanyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub entity: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    /// Usable entities in id order.
    pub entities: Vec<EntityResult>,
    pub skipped: Vec<Skipped>,
    /// Entities ordered by rank.
    pub report: Vec<CompanyReport>,
    /// Years covered by every usable entity; rows of `features`.
    pub years: Vec<i64>,
    pub features: FeatureMatrix,
    pub pca: PcaResult,
    pub dendrogram: Dendrogram,
    /// Squared correlation of score against average volatility, when defined.
    pub r2_score_volatility: Option<f64>,
}

fn analyze_entity(s: &TimeSeries, cfg: &AnalysisConfig) -> Result<EntityResult> {
    let dcfg = cfg.divergence_config();
    let windows = irreversibility_profile(s, cfg.window, cfg.graph, dcfg)?;
    let annual = annual_irreversibility(s, cfg.window, cfg.graph, dcfg)?;
    let volatility: Vec<(i32, f64)> = partition_years(s)?
        .keys()
        .filter_map(|&y| annualized_volatility(s, y).ok().map(|v| (y, v)))
        .collect();
    if volatility.is_empty() {
        return Err(Error::InsufficientData(
            "no year with a defined volatility".into(),
        ));
    }
    let avg_volatility = volatility.iter().map(|v| v.1).sum::<f64>() / volatility.len() as f64;
    let report = CompanyReport {
        entity: s.entity_id().to_string(),
        score: score(&annual)?,
        irr_variance: irr_variance(&annual)?,
        avg_volatility,
        rank: 0,
    };
    Ok(EntityResult {
        windows,
        annual,
        volatility,
        report,
    })
}

/// Runs the full analysis on the current rayon pool. Entities that cannot
/// be analysed (too short, fewer than two years with a complete window,
/// ...) are skipped and listed; if none remain the result is
/// [`Error::NoUsableData`].
pub fn analyze_series<'a, I>(series: I, cfg: &AnalysisConfig) -> Result<Analysis>
where
    I: IntoIterator<Item = &'a TimeSeries>,
{
    cfg.validate()?;
    let mut series: Vec<&TimeSeries> = series.into_iter().collect();
    series.sort_by(|a, b| a.entity_id().cmp(b.entity_id()));
    let outcomes: Vec<Result<EntityResult>> =
        series.par_iter().map(|s| analyze_entity(s, cfg)).collect();

    let mut entities = Vec::new();
    let mut skipped = Vec::new();
    for (s, outcome) in series.iter().zip(outcomes) {
        match outcome {
            Ok(e) => entities.push(e),
            Err(Error::Config(msg)) => return Err(Error::Config(msg)),
            Err(e) => skipped.push(Skipped {
                entity: s.entity_id().to_string(),
                reason: e.to_string(),
            }),
        }
    }
    if entities.is_empty() {
        return Err(Error::NoUsableData(format!(
            "none of {} entities has two or more years with a complete window",
            series.len()
        )));
    }

    let report = rank_entities(entities.iter().map(|e| e.report.clone()).collect());
    let r2_score_volatility = if entities.len() >= 3 {
        let s: Vec<f64> = entities.iter().map(|e| e.report.score).collect();
        let v: Vec<f64> = entities.iter().map(|e| e.report.avg_volatility).collect();
        pearson_r2(&s, &v).ok()
    } else {
        None
    };

    let mut common: BTreeSet<i64> = entities[0].annual.points.iter().map(|p| p.key).collect();
    for e in &entities[1..] {
        let keys: BTreeSet<i64> = e.annual.points.iter().map(|p| p.key).collect();
        common = common.intersection(&keys).copied().collect();
    }
    let years: Vec<i64> = common.into_iter().collect();
    let annual: Vec<IrreversibilityProfile> = entities.iter().map(|e| e.annual.clone()).collect();
    let features = FeatureMatrix::from_annual(&annual, &years)?;
    let pca = pca(&features, cfg.components, cfg.standardize)?;
    let dendrogram = cluster_complete(&distance_matrix(&features), features.rows())?;

    Ok(Analysis {
        entities,
        skipped,
        report,
        years,
        features,
        pca,
        dendrogram,
        r2_score_volatility,
    })
}

/// Entity id made safe for use as a file stem.
pub fn file_stem(entity: &str) -> String {
    entity
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn features_csv(fm: &FeatureMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["year".to_string()];
    header.extend(fm.columns().iter().cloned());
    w.write_record(&header)?;
    for (label, row) in fm.rows().iter().zip(fm.values()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn plot_csv(s: &TimeSeries, every: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "timestamp", "price"])?;
    for i in (0..s.len()).step_by(every) {
        let ts = s.timestamps().map_or(String::new(), |t| t[i].to_string());
        w.write_record([i.to_string(), ts, s.values()[i].to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes every artifact of `analysis` under `dir`:
///
/// ```text
/// profiles/<entity>.csv   per-window values (entity,key,value)
/// plots/<entity>.csv      downsampled prices (index,timestamp,price)
/// annual.csv              per-year values of all entities
/// volatility.csv          entity,year,volatility
/// features.csv            year x entity matrix used for PCA/clustering
/// report.csv              entity,score,irr_variance,avg_volatility,rank
/// pca.json                {labels, projections, explained_variance_ratio}
/// dendrogram.json / .nwk  complete-linkage tree of the years
/// summary.json            configuration, skipped entities, r^2
/// ```
pub fn write_artifacts(
    analysis: &Analysis,
    series: &[&TimeSeries],
    cfg: &AnalysisConfig,
    extra: serde_json::Value,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let profiles_dir = dir.join("profiles");
    let plots_dir = dir.join("plots");
    fs::create_dir_all(&profiles_dir)?;
    fs::create_dir_all(&plots_dir)?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, contents: String| -> Result<()> {
        write(&path, &contents)?;
        written.push(path);
        Ok(())
    };

    let mut stems = BTreeSet::new();
    for e in &analysis.entities {
        let stem = file_stem(&e.windows.entity);
        if !stems.insert(stem.clone()) {
            return Err(Error::Config(format!(
                "entity ids collide as file name `{stem}`"
            )));
        }
        put(
            profiles_dir.join(format!("{stem}.csv")),
            profiles_to_csv([&e.windows])?,
        )?;
    }
    for s in series {
        if stems.contains(&file_stem(s.entity_id())) {
            put(
                plots_dir.join(format!("{}.csv", file_stem(s.entity_id()))),
                plot_csv(s, cfg.plot_every)?,
            )?;
        }
    }
    put(
        dir.join("annual.csv"),
        profiles_to_csv(analysis.entities.iter().map(|e| &e.annual))?,
    )?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["entity", "year", "volatility"])?;
    for e in &analysis.entities {
        for (y, v) in &e.volatility {
            w.write_record([e.report.entity.clone(), y.to_string(), v.to_string()])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let vol = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    put(dir.join("volatility.csv"), vol)?;
    put(dir.join("features.csv"), features_csv(&analysis.features)?)?;
    put(dir.join("report.csv"), reports_to_csv(&analysis.report)?)?;
    put(dir.join("pca.json"), to_json(&analysis.pca.to_json())?)?;
    put(
        dir.join("dendrogram.json"),
        to_json(&analysis.dendrogram.to_json())?,
    )?;
    put(
        dir.join("dendrogram.nwk"),
        format!("{}\n", analysis.dendrogram.to_newick()),
    )?;

    let summary = json!({
        "config": cfg,
        "run": extra,
        "entities": analysis.entities.iter().map(|e| &e.report.entity).collect::<Vec<_>>(),
        "skipped": analysis.skipped,
        "years": analysis.years,
        "r2_score_volatility": analysis.r2_score_volatility,
    });
    put(dir.join("summary.json"), to_json(&summary)?)?;
    Ok(written)
}

/// `analyze` end to end: read the CSV, analyse on a pool of the configured
/// size, write the artifacts. Returns the written paths.
pub fn run_analyze(run: &RunConfig) -> Result<Vec<PathBuf>> {
    run.analysis.validate()?;
    if run.threads == Some(0) {
        return Err(Error::Config("thread count must be >= 1".into()));
    }
    let text = fs::read_to_string(&run.input).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", run.input.display()),
        ))
    })?;
    let parsed = parse_price_csv(&text, &run.csv)?;
    if parsed.series.is_empty() {
        return Err(Error::NoUsableData(format!(
            "{} has no price rows",
            run.input.display()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(run.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let analysis = pool.install(|| analyze_series(parsed.series.values(), &run.analysis))?;
    fs::create_dir_all(&run.output)?;
    let series: Vec<&TimeSeries> = parsed.series.values().collect();
    let extra = json!({ "seed": run.seed, "dropped_rows": parsed.dropped_rows });
    write_artifacts(&analysis, &series, &run.analysis, extra, &run.output)
}

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use irrevis::nullmodels::{baseline, generate, GeneratorKind, GeneratorSpec};
use irrevis::pipeline::{run_analyze, AnalysisConfig, RunConfig};
use irrevis::series::{parse_price_csv, partition_windows, write_price_csv, CsvOptions};
use irrevis::{visibility, DivergenceConfig, DivergenceKind, Error, GraphKind, Result, TimeSeries};

#[derive(Parser)]
#[command(
    name = "irrevis",
    version,
    about = "Visibility-graph time irreversibility of price series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a long-format price CSV.
    Analyze(AnalyzeArgs),
    /// Write a synthetic series in the ingestion CSV format.
    Simulate(SimulateArgs),
    /// Null-model quantiles of the irreversibility at window size n.
    Baseline(BaselineArgs),
    /// Edge list of the directed graph of one window.
    GraphExport(GraphExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Graph {
    Vg,
    Hvg,
}

impl From<Graph> for GraphKind {
    fn from(g: Graph) -> Self {
        match g {
            Graph::Vg => GraphKind::Vg,
            Graph::Hvg => GraphKind::Hvg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Divergence {
    Kld,
    L1,
}

impl From<Divergence> for DivergenceKind {
    fn from(d: Divergence) -> Self {
        match d {
            Divergence::Kld => DivergenceKind::Kld,
            Divergence::L1 => DivergenceKind::L1,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BiasArg {
    #[value(name = "one_over_n", alias = "one-over-n")]
    OneOverN,
    None,
}

#[derive(Args)]
struct CsvArgs {
    /// Field delimiter (a single byte).
    #[arg(long, default_value = ",")]
    delimiter: char,
    #[arg(long, default_value = "entity")]
    entity_column: String,
    #[arg(long, default_value = "timestamp")]
    timestamp_column: String,
    #[arg(long, default_value = "price")]
    price_column: String,
}

impl CsvArgs {
    fn options(&self) -> Result<CsvOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config(format!(
                "delimiter `{}` is not ASCII",
                self.delimiter
            )));
        }
        Ok(CsvOptions {
            delimiter: self.delimiter as u8,
            entity_column: self.entity_column.clone(),
            timestamp_column: Some(self.timestamp_column.clone()),
            price_column: self.price_column.clone(),
        })
    }
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long, value_enum, default_value = "vg")]
    graph: Graph,
    #[arg(long, value_enum, default_value = "kld")]
    divergence: Divergence,
    #[arg(long, value_enum, default_value = "one_over_n")]
    bias: BiasArg,
    /// Window size.
    #[arg(long, default_value_t = 5000)]
    n: usize,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Directory for the artifacts; created if missing.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    measure: MeasureArgs,
    /// PCA components.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long)]
    standardize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, env = "IRREVIS_THREADS")]
    threads: Option<usize>,
    /// Keep every k-th price in the plot files.
    #[arg(long, default_value_t = 1000)]
    plot_every: usize,
    #[command(flatten)]
    csv: CsvArgs,
}

#[derive(Args)]
struct GeneratorArgs {
    /// white_noise (noise), additive_walk (walk), multiplicative_walk (gbm) or fbm.
    #[arg(long, value_parser = parse_kind)]
    kind: GeneratorKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-step drift.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mu: f64,
    /// Per-step log-volatility of the multiplicative walk.
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
    /// Hurst exponent of fBm, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    hurst: f64,
}

impl GeneratorArgs {
    fn spec(&self, length: usize) -> GeneratorSpec {
        GeneratorSpec::new(self.kind, length, self.seed)
            .with_mu(self.mu)
            .with_sigma(self.sigma)
            .with_hurst(self.hurst)
    }
}

fn parse_kind(s: &str) -> std::result::Result<GeneratorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[arg(long, default_value_t = 10_000)]
    length: usize,
    /// Entity id written to the CSV (default: the kind name).
    #[arg(long)]
    entity: Option<String>,
    /// Date of the first observation (UTC midnight).
    #[arg(long, default_value = "2000-01-01")]
    start: NaiveDate,
    /// Seconds between observations.
    #[arg(long, default_value_t = 60)]
    step: i64,
    /// Output file (default: stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    generator: GeneratorArgs,
    #[command(flatten)]
    measure: MeasureArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = "IRREVIS_THREADS")]
    threads: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GraphExportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    entity: String,
    /// Window index.
    #[arg(long, default_value_t = 0)]
    window: usize,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, value_enum, default_value = "vg")]
    graph: Graph,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    csv: CsvArgs,
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        }),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn divergence_config(m: &MeasureArgs) -> DivergenceConfig {
    DivergenceConfig {
        kind: m.divergence.into(),
        bias: match m.bias {
            BiasArg::OneOverN => irrevis::Bias::OneOverN(m.n),
            BiasArg::None => irrevis::Bias::None,
        },
    }
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let run = RunConfig {
        input: args.input,
        output: args.output,
        analysis: AnalysisConfig {
            graph: args.measure.graph.into(),
            divergence: args.measure.divergence.into(),
            bias: args.measure.bias == BiasArg::OneOverN,
            window: args.measure.n,
            components: args.m,
            standardize: args.standardize,
            plot_every: args.plot_every,
        },
        csv: args.csv.options()?,
        seed: args.seed,
        threads: args.threads,
    };
    let written = run_analyze(&run)?;
    eprintln!("wrote {} files to {}", written.len(), run.output.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let spec = args.generator.spec(args.length);
    let s = generate(&spec)?;
    let values: Vec<f64> = match spec.kind {
        GeneratorKind::MultiplicativeWalk => s.into_values(),
        _ => s.values().iter().map(|v| v.exp()).collect(),
    };
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain(format!(
            "price overflows f64 at index {i}; use a shorter --length"
        )));
    }
    if args.step <= 0 {
        return Err(Error::Config(format!(
            "--step must be positive, got {}",
            args.step
        )));
    }
    let t0 = args
        .start
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp();
    let ts = (0..values.len() as i64)
        .map(|i| t0 + i * args.step)
        .collect();
    let entity = args.entity.unwrap_or_else(|| spec.kind.to_string());
    let series = TimeSeries::prices(entity, values, Some(ts))?;
    let text = write_price_csv([&series], &CsvOptions::default())?;
    emit(args.output.as_ref(), &text)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    if threads == Some(0) {
        return Err(Error::Config("thread count must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run_baseline(args: BaselineArgs) -> Result<()> {
    let spec = args.generator.spec(args.measure.n);
    let cfg = divergence_config(&args.measure);
    let pool = thread_pool(args.threads)?;
    let b = pool.install(|| {
        baseline(
            &spec,
            args.measure.n,
            args.trials,
            args.measure.graph.into(),
            cfg,
        )
    })?;
    let mut text = serde_json::to_string_pretty(&b)?;
    text.push('\n');
    emit(args.output.as_ref(), &text)
}

fn graph_export(args: GraphExportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", args.input.display()),
        ))
    })?;
    let parsed = parse_price_csv(&text, &args.csv.options()?)?;
    if parsed.series.is_empty() {
        return Err(Error::NoUsableData(format!(
            "{} has no price rows",
            args.input.display()
        )));
    }
    let s = parsed
        .series
        .get(&args.entity)
        .ok_or_else(|| Error::Config(format!("no entity `{}` in input", args.entity)))?;
    let windows = partition_windows(s, args.n)?;
    let w = windows.get(args.window).ok_or_else(|| {
        Error::InsufficientData(format!(
            "`{}` has {} complete windows of {}, asked for index {}",
            args.entity,
            windows.len(),
            args.n,
            args.window
        ))
    })?;
    let g = visibility::build(w.values(), args.graph.into())?;
    emit(args.output.as_ref(), &g.to_edge_csv())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Baseline(a) => run_baseline(a),
        Command::GraphExport(a) => graph_export(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::NoUsableData(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

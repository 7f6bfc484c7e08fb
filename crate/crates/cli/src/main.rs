use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use overbook_core::sim::{self, Idiom, Strategy};
use overbook_core::swiftiles;
use overbook_core::tiling::{self, Operand, TileShape};
use overbook::experiment::{self, ExperimentSpec, KSetting, Sweep};
use overbook::workload::Workload;
use overbook::{report, trace, CliError};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "overbook", version, about = "Overbooked tiling experiments for sparse matrix multiplication")]
struct Cli {
    /// Directory searched for relative workload paths.
    #[arg(long, global = true, env = "OVERBOOK_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run each strategy once on one or more workloads.
    Simulate(RunArgs),
    /// Occupancy histogram and CDF of one tiling.
    TileStats(TileStatsArgs),
    /// Run the statistical tile-size estimator.
    Swiftiles(SwiftilesArgs),
    /// Find the largest ladder tile size that never overbooks.
    Prescient(PrescientArgs),
    /// Run an experiment spec with a sweep axis.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OperandArg {
    A,
    B,
}

impl From<OperandArg> for Operand {
    fn from(o: OperandArg) -> Self {
        match o {
            OperandArg::A => Operand::A,
            OperandArg::B => Operand::B,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum IdiomArg {
    Tailor,
    Buffet,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix Market path or generator such as `banded:4000x1000:250:0.03:0.001@1`.
    #[arg(long)]
    workload: Vec<String>,
    #[arg(long)]
    strategy: Vec<String>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long)]
    y: Option<f64>,
    /// Sample positives; `0` keeps the initial estimate, `all` measures every tile.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    seed: Vec<u64>,
    #[arg(long, value_enum)]
    idiom: Option<IdiomArg>,
    #[arg(long)]
    fifo_len: Option<usize>,
    /// Output directory for runs.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the buffer event log of the fullest A tile (first workload and
    /// strategy) as line-delimited JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated y values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["sweep_k", "sweep_capacity"])]
    sweep_y: Vec<f64>,
    /// Comma-separated k values (`all` for exhaustive).
    #[arg(long, value_delimiter = ',', conflicts_with = "sweep_capacity")]
    sweep_k: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    sweep_capacity: Vec<usize>,
}

#[derive(Args)]
struct TileStatsArgs {
    #[arg(long)]
    workload: String,
    /// Tile shape as ROWSxCOLS.
    #[arg(long, conflicts_with = "size")]
    shape: Option<String>,
    /// Tile size, mapped to a shape K-first.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, value_enum, default_value = "a")]
    operand: OperandArg,
    #[arg(long)]
    capacity: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SwiftilesArgs {
    #[arg(long)]
    workload: String,
    #[arg(long)]
    capacity: usize,
    #[arg(long, default_value_t = 0.10)]
    y: f64,
    #[arg(long, default_value = "10")]
    k: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "a")]
    operand: OperandArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PrescientArgs {
    #[arg(long)]
    workload: String,
    #[arg(long)]
    capacity: usize,
    #[arg(long, value_enum, default_value = "a")]
    operand: OperandArg,
    /// Candidate sizes per doubling of the ladder.
    #[arg(long, default_value_t = 1)]
    ladder_steps: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_k(s: &str) -> Result<KSetting, CliError> {
    KSetting::parse(s).ok_or_else(|| CliError::InvalidSpec(format!("k must be an integer or `all`, got {s:?}")))
}

fn parse_shape(s: &str) -> Result<TileShape, CliError> {
    s.split_once('x')
        .and_then(|(r, c)| TileShape::new(r.parse().ok()?, c.parse().ok()?).ok())
        .ok_or_else(|| CliError::InvalidSpec(format!("shape must be ROWSxCOLS with nonzero ranges, got {s:?}")))
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec, CliError> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_file(path)?,
        None => ExperimentSpec {
            workloads: Vec::new(),
            strategies: Strategy::ALL.to_vec(),
            config: Default::default(),
            sweep: Sweep::None,
            operand_b: Default::default(),
            baseline: None,
            output_dir: None,
            seeds: vec![0],
        },
    };
    if !args.workload.is_empty() {
        spec.workloads = args.workload.iter().map(|w| Workload::parse(w)).collect::<Result<_, _>>()?;
    }
    if !args.strategy.is_empty() {
        spec.strategies = args
            .strategy
            .iter()
            .map(|s| Strategy::parse(s).ok_or_else(|| CliError::UnknownStrategy(s.clone())))
            .collect::<Result<_, _>>()?;
        spec.baseline = spec.baseline.filter(|b| spec.strategies.contains(b));
    }
    if let Some(c) = args.capacity {
        spec.config.capacity = Some(c);
        spec.config.capacity_b = None;
    }
    if let Some(y) = args.y {
        spec.config.y = Some(y);
    }
    if let Some(k) = &args.k {
        spec.config.k = Some(parse_k(k)?);
    }
    if !args.seed.is_empty() {
        spec.seeds = args.seed.clone();
    }
    if let Some(i) = args.idiom {
        spec.config.idiom = Some(match i {
            IdiomArg::Tailor => Idiom::Tailor,
            IdiomArg::Buffet => Idiom::Buffet,
        });
    }
    if let Some(f) = args.fifo_len {
        spec.config.fifo_len = Some(f);
    }
    if let Some(out) = &args.out {
        spec.output_dir = Some(out.clone());
    }
    Ok(spec)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => report::write_json(value, path),
        None => {
            println!("{}", report::to_json(value)?);
            Ok(())
        }
    }
}

fn run_experiment(spec: &ExperimentSpec, data_dir: Option<&Path>) -> Result<(), CliError> {
    let rows = experiment::run(spec, data_dir)?;
    let summary = experiment::summarize(spec, &rows);
    match &spec.output_dir {
        Some(dir) => {
            let (csv_path, json_path) = report::output_paths(dir);
            report::write_csv(&rows, &csv_path)?;
            report::write_json(&summary, &json_path)?;
            eprintln!("wrote {} runs to {}", rows.len(), dir.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report::write_csv_body(&rows, &mut lock)?;
            lock.flush().map_err(|source| CliError::Output { path: "<stdout>".into(), source })?;
        }
    }
    Ok(())
}

fn simulate_cmd(args: &RunArgs, data_dir: Option<&Path>) -> Result<(), CliError> {
    let mut spec = build_spec(args)?;
    spec.sweep = Sweep::None;
    spec.validate()?;
    if let Some(path) = &args.trace {
        let w = &spec.workloads[0];
        let a = w.load(data_dir)?;
        let b = a.transpose();
        let cfg = spec.config.to_config().with_seed(spec.seeds[0]).with_strategy(spec.strategies[0]);
        let (shape, _, _, _) =
            sim::choose_shapes(&a, &b, &cfg).map_err(|e| CliError::core(format!("workload {}", w.name), e))?;
        let (tile, occupancy) = trace::fullest_tile(&a, shape);
        report::write_jsonl(&trace::tile_trace(&cfg, tile, occupancy, 2)?, path)?;
    }
    run_experiment(&spec, data_dir)
}

fn sweep_cmd(args: &SweepArgs, data_dir: Option<&Path>) -> Result<(), CliError> {
    let mut spec = build_spec(&args.run)?;
    if !args.sweep_y.is_empty() {
        spec.sweep = Sweep::Y(args.sweep_y.clone());
    } else if !args.sweep_k.is_empty() {
        spec.sweep = Sweep::K(args.sweep_k.iter().map(|k| parse_k(k)).collect::<Result<_, _>>()?);
    } else if !args.sweep_capacity.is_empty() {
        spec.sweep = Sweep::Capacity(args.sweep_capacity.clone());
    }
    run_experiment(&spec, data_dir)
}

#[derive(Serialize)]
struct SwiftilesOut {
    schema_version: u32,
    capacity: usize,
    y: f64,
    initial_size: usize,
    initial_shape: TileShape,
    samples: usize,
    qy: usize,
    target_size: usize,
    shape: TileShape,
    overbooking_rate_initial: f64,
    overbooking_rate: f64,
}

fn swiftiles_cmd(args: &SwiftilesArgs, data_dir: Option<&Path>) -> Result<(), CliError> {
    let m = Workload::parse(&args.workload)?.load(data_dir)?;
    let mut cfg = swiftiles::SwiftilesConfig::new(args.capacity).with_y(args.y).with_seed(args.seed);
    cfg = match parse_k(&args.k)? {
        KSetting::Count(0) => cfg.with_k(1),
        KSetting::Count(k) => cfg.with_k(k),
        _ => cfg.exhaustive(),
    };
    let ctx = |e| CliError::core("swiftiles", e);
    let r = swiftiles::estimate_tile_size(&m, &cfg, args.operand.into()).map_err(ctx)?;
    let rate = |shape| tiling::overbooking_rate(&m, shape, args.capacity).map_err(ctx);
    let out = SwiftilesOut {
        schema_version: experiment::SCHEMA_VERSION,
        capacity: args.capacity,
        y: args.y,
        initial_size: r.initial_size,
        initial_shape: r.initial_shape,
        samples: r.sampled.len(),
        qy: r.qy,
        target_size: r.target_size,
        shape: r.shape,
        overbooking_rate_initial: rate(r.initial_shape)?,
        overbooking_rate: rate(r.shape)?,
    };
    emit(&out, args.out.as_deref())
}

#[derive(Serialize)]
struct PrescientOut {
    schema_version: u32,
    capacity: usize,
    ladder: Vec<usize>,
    shape: TileShape,
    size: usize,
    max_occupancy: usize,
}

fn prescient_cmd(args: &PrescientArgs, data_dir: Option<&Path>) -> Result<(), CliError> {
    let m = Workload::parse(&args.workload)?.load(data_dir)?;
    let ladder = tiling::geometric_ladder(args.capacity, m.size(), args.ladder_steps);
    let shape = tiling::prescient_tile_size(&m, args.capacity, &ladder, args.operand.into())
        .map_err(|e| CliError::core("prescient", e))?;
    let out = PrescientOut {
        schema_version: experiment::SCHEMA_VERSION,
        capacity: args.capacity,
        size: shape.size(),
        max_occupancy: tiling::occupancy_histogram(&m, shape).max(),
        ladder,
        shape,
    };
    emit(&out, args.out.as_deref())
}

fn tile_stats_cmd(args: &TileStatsArgs, data_dir: Option<&Path>) -> Result<(), CliError> {
    let m = Workload::parse(&args.workload)?.load(data_dir)?;
    let shape = match (&args.shape, args.size) {
        (Some(s), _) => parse_shape(s)?,
        (None, Some(0)) => return Err(CliError::InvalidSpec("tile size must be at least 1".into())),
        (None, Some(size)) => tiling::size_to_shape(size, m.rows(), m.cols(), args.operand.into()),
        (None, None) => return Err(CliError::InvalidSpec("one of --shape or --size is required".into())),
    };
    if args.capacity == 0 {
        return Err(CliError::InvalidSpec("capacity must be at least 1".into()));
    }
    emit(&experiment::tile_stats(&m, shape, args.capacity), args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let data_dir = cli.data_dir.as_deref();
    let result = match &cli.command {
        Command::Simulate(a) => simulate_cmd(a, data_dir),
        Command::TileStats(a) => tile_stats_cmd(a, data_dir),
        Command::Swiftiles(a) => swiftiles_cmd(a, data_dir),
        Command::Prescient(a) => prescient_cmd(a, data_dir),
        Command::Sweep(a) => sweep_cmd(a, data_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

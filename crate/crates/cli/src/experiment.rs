//! Experiment specs and the sweep driver.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use overbook_core::sim::{self, EnergyTable, EstimateSummary, Idiom, SimConfig, SimReport, Strategy};
use overbook_core::swiftiles::{self, Sampling};
use overbook_core::tiling::{self, Operand, TileShape};
use overbook_core::SparseMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::workload::Workload;

/// Sample count setting for the estimator. `0` tiles with the initial
/// size guess and skips scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KSetting {
    Count(usize),
    Named(KName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KName {
    All,
}

impl KSetting {
    pub const ALL: KSetting = KSetting::Named(KName::All);

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "all" | "exhaustive" => Some(Self::ALL),
            _ => s.parse().ok().map(KSetting::Count),
        }
    }

    fn label(&self) -> String {
        match self {
            KSetting::Count(k) => k.to_string(),
            KSetting::Named(KName::All) => "all".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "axis", content = "values", rename_all = "lowercase")]
pub enum Sweep {
    #[default]
    None,
    Y(Vec<f64>),
    K(Vec<KSetting>),
    Capacity(Vec<usize>),
}

impl Sweep {
    pub fn axis(&self) -> &'static str {
        match self {
            Sweep::None => "none",
            Sweep::Y(_) => "y",
            Sweep::K(_) => "k",
            Sweep::Capacity(_) => "capacity",
        }
    }

    fn points(&self) -> Vec<Point> {
        match self {
            Sweep::None => vec![Point::None],
            Sweep::Y(v) => v.iter().map(|&y| Point::Y(y)).collect(),
            Sweep::K(v) => v.iter().map(|&k| Point::K(k)).collect(),
            Sweep::Capacity(v) => v.iter().map(|&c| Point::Capacity(c)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Point {
    None,
    Y(f64),
    K(KSetting),
    Capacity(usize),
}

impl Point {
    fn label(&self) -> String {
        match self {
            Point::None => String::new(),
            Point::Y(y) => y.to_string(),
            Point::K(k) => k.label(),
            Point::Capacity(c) => c.to_string(),
        }
    }
}

/// Which matrix plays B for a workload A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OperandB {
    /// `A × Aᵀ`.
    #[default]
    Transpose,
    /// `A × A`; the workload must be square.
    Same,
}

/// Optional overrides on top of [`SimConfig::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub capacity: Option<usize>,
    pub capacity_b: Option<usize>,
    pub fifo_len: Option<usize>,
    pub idiom: Option<Idiom>,
    pub y: Option<f64>,
    pub k: Option<KSetting>,
    pub bandwidth: Option<f64>,
    pub compute_throughput: Option<f64>,
    pub round_trip_latency: Option<f64>,
    pub words_per_nonzero: Option<usize>,
    pub rows_per_pass: Option<usize>,
    pub energy: Option<EnergyTable>,
    pub ladder: Option<Vec<usize>>,
    pub ladder_steps: Option<u32>,
}

pub const DEFAULT_CAPACITY: usize = 256;

impl ConfigOverrides {
    pub fn to_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.capacity.unwrap_or(DEFAULT_CAPACITY));
        if let Some(c) = self.capacity_b {
            cfg.b.capacity = c;
        }
        if let Some(f) = self.fifo_len {
            cfg = cfg.with_fifo_len(f);
        }
        if let Some(i) = self.idiom {
            cfg.idiom = i;
        }
        if let Some(y) = self.y {
            cfg.y = y;
        }
        if let Some(k) = self.k {
            cfg.sampling = sampling_for(k);
        }
        if let Some(v) = self.bandwidth {
            cfg.bandwidth = v;
        }
        if let Some(v) = self.compute_throughput {
            cfg.compute_throughput = v;
        }
        if let Some(v) = self.round_trip_latency {
            cfg.round_trip_latency = v;
        }
        if let Some(v) = self.words_per_nonzero {
            cfg.words_per_nonzero = v;
        }
        if let Some(v) = self.rows_per_pass {
            cfg.rows_per_pass = v;
        }
        if let Some(e) = self.energy {
            cfg.energy = e;
        }
        if let Some(l) = &self.ladder {
            cfg.ladder = Some(l.clone());
        }
        if let Some(s) = self.ladder_steps {
            cfg.ladder_steps = s;
        }
        cfg
    }
}

// k = 0 is handled by the driver; the sampling value is a placeholder
fn sampling_for(k: KSetting) -> Sampling {
    match k {
        KSetting::Count(0) => Sampling::Positives(1),
        KSetting::Count(k) => Sampling::Positives(k),
        KSetting::Named(KName::All) => Sampling::Exhaustive,
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub workloads: Vec<Workload>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub config: ConfigOverrides,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub operand_b: OperandB,
    /// Strategy the summary ratios are taken against; the first listed
    /// strategy when unset.
    #[serde(default)]
    pub baseline: Option<Strategy>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|source| CliError::SpecParse { path: path.to_path_buf(), source })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |why: &str| Err(CliError::InvalidSpec(why.into()));
        if self.workloads.is_empty() {
            return bad("at least one workload is required");
        }
        if self.strategies.is_empty() {
            return bad("at least one strategy is required");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.sweep != Sweep::None && self.sweep.points().is_empty() {
            return bad("sweep needs at least one value");
        }
        if let Some(b) = self.baseline {
            if !self.strategies.contains(&b) {
                return bad("baseline strategy is not in the strategy list");
            }
        }
        for p in self.sweep.points() {
            self.config_at(p, 0).validate().map_err(|e| CliError::InvalidSpec(e.to_string()))?;
        }
        Ok(())
    }

    pub fn baseline(&self) -> Strategy {
        self.baseline.unwrap_or(self.strategies[0])
    }

    fn config_at(&self, point: Point, seed: u64) -> SimConfig {
        let mut cfg = self.config.to_config().with_seed(seed);
        match point {
            Point::None => {}
            Point::Y(y) => cfg.y = y,
            Point::K(k) => cfg.sampling = sampling_for(k),
            Point::Capacity(c) => {
                cfg.a.capacity = c;
                cfg.b.capacity = c;
            }
        }
        cfg
    }

    fn k_at(&self, point: Point) -> Option<KSetting> {
        match point {
            Point::K(k) => Some(k),
            _ => self.config.k,
        }
    }
}

/// One CSV row: a full run report with the sweep coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub workload: String,
    pub strategy: &'static str,
    pub idiom: &'static str,
    pub sweep_axis: &'static str,
    pub sweep_value: String,
    pub seed: u64,
    pub capacity_a: usize,
    pub capacity_b: usize,
    pub y: f64,
    pub k: String,
    pub shape_a_rows: usize,
    pub shape_a_cols: usize,
    pub shape_b_rows: usize,
    pub shape_b_cols: usize,
    pub tiles_a: usize,
    pub tiles_b: usize,
    pub pairs: u64,
    pub first_fetches: u64,
    pub refetches: u64,
    pub parent_traffic: u64,
    pub refetch_overhead: f64,
    pub output_elements: u64,
    pub traffic_words: u64,
    pub effectual_multiplies: u64,
    pub reuse_fraction: f64,
    pub bumped_fraction: f64,
    pub overbooking_rate: f64,
    pub overbooking_rate_a: f64,
    pub overbooking_rate_b: f64,
    pub cycles: f64,
    pub energy: f64,
    pub initial_size_a: Option<usize>,
    pub samples_a: Option<usize>,
    pub qy_a: Option<usize>,
    pub target_size_a: Option<usize>,
    pub initial_size_b: Option<usize>,
    pub samples_b: Option<usize>,
    pub qy_b: Option<usize>,
    pub target_size_b: Option<usize>,
}

impl Row {
    fn new(workload: &str, sweep: &Sweep, point: Point, seed: u64, cfg: &SimConfig, k: Option<KSetting>, r: &SimReport) -> Self {
        let est = |e: Option<EstimateSummary>| {
            (e.map(|e| e.initial_size), e.map(|e| e.samples), e.map(|e| e.qy), e.map(|e| e.target_size))
        };
        let (initial_size_a, samples_a, qy_a, target_size_a) = est(r.estimate_a);
        let (initial_size_b, samples_b, qy_b, target_size_b) = est(r.estimate_b);
        Row {
            workload: workload.to_string(),
            strategy: r.strategy.name(),
            idiom: r.idiom.name(),
            sweep_axis: sweep.axis(),
            sweep_value: point.label(),
            seed,
            capacity_a: cfg.a.capacity,
            capacity_b: cfg.b.capacity,
            y: cfg.y,
            k: k.unwrap_or(KSetting::Count(10)).label(),
            shape_a_rows: r.shape_a.rows,
            shape_a_cols: r.shape_a.cols,
            shape_b_rows: r.shape_b.rows,
            shape_b_cols: r.shape_b.cols,
            tiles_a: r.tiles_a,
            tiles_b: r.tiles_b,
            pairs: r.pairs,
            first_fetches: r.first_fetches,
            refetches: r.refetches,
            parent_traffic: r.parent_traffic,
            refetch_overhead: r.refetch_overhead(),
            output_elements: r.output_elements,
            traffic_words: r.traffic_words,
            effectual_multiplies: r.effectual_multiplies,
            reuse_fraction: r.reuse_fraction,
            bumped_fraction: r.bumped_fraction,
            overbooking_rate: r.overbooking_rate,
            overbooking_rate_a: r.overbooking_rate_a,
            overbooking_rate_b: r.overbooking_rate_b,
            cycles: r.cycles,
            energy: r.energy,
            initial_size_a,
            samples_a,
            qy_a,
            target_size_a,
            initial_size_b,
            samples_b,
            qy_b,
            target_size_b,
        }
    }
}

/// Run one strategy, honouring `k = 0` (tile with the unscaled initial
/// estimate).
pub fn run_one(
    a: &SparseMatrix,
    b: &SparseMatrix,
    cfg: &SimConfig,
    k: Option<KSetting>,
) -> Result<SimReport, overbook_core::Error> {
    if cfg.strategy != Strategy::SwiftilesOverbook || k != Some(KSetting::Count(0)) {
        return sim::simulate(a, b, cfg);
    }
    let initial = |m: &SparseMatrix, capacity: usize, operand| {
        let r = swiftiles::estimate_tile_size(m, &cfg.swiftiles(capacity), operand)?;
        let summary = EstimateSummary { initial_size: r.initial_size, samples: 0, qy: 0, target_size: r.initial_size };
        Ok::<_, overbook_core::Error>((r.initial_shape, summary))
    };
    let (sa, ea) = initial(a, cfg.a.capacity, Operand::A)?;
    let (sb, eb) = initial(b, cfg.b.capacity, Operand::B)?;
    let mut report = sim::simulate_with_shapes(a, b, sa, sb, cfg)?;
    report.estimate_a = Some(ea);
    report.estimate_b = Some(eb);
    Ok(report)
}

struct Loaded {
    name: String,
    a: SparseMatrix,
    b: SparseMatrix,
}

fn load_all(spec: &ExperimentSpec, data_dir: Option<&Path>) -> Result<Vec<Loaded>, CliError> {
    spec.workloads
        .par_iter()
        .map(|w| {
            let a = w.load(data_dir)?;
            let b = match spec.operand_b {
                OperandB::Transpose => a.transpose(),
                OperandB::Same if a.rows() == a.cols() => a.clone(),
                OperandB::Same => {
                    return Err(CliError::InvalidSpec(format!("workload {} is not square; A x A is undefined", w.name)))
                }
            };
            Ok(Loaded { name: w.name.clone(), a, b })
        })
        .collect()
}

/// Run every (workload, strategy, sweep point, seed) combination. Rows come
/// back in that nesting order regardless of scheduling.
pub fn run(spec: &ExperimentSpec, data_dir: Option<&Path>) -> Result<Vec<Row>, CliError> {
    spec.validate()?;
    let loaded = load_all(spec, data_dir)?;
    let points = spec.sweep.points();
    let mut jobs = Vec::new();
    for w in 0..loaded.len() {
        for &strategy in &spec.strategies {
            for &point in &points {
                for &seed in &spec.seeds {
                    jobs.push((w, strategy, point, seed));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(w, strategy, point, seed)| {
            let l = &loaded[w];
            let cfg = spec.config_at(point, seed).with_strategy(strategy);
            let k = spec.k_at(point);
            let report = run_one(&l.a, &l.b, &cfg, k).map_err(|e| {
                CliError::core(format!("{} / {} / {} {}", l.name, strategy.name(), spec.sweep.axis(), point.label()), e)
            })?;
            Ok(Row::new(&l.name, &spec.sweep, point, seed, &cfg, k, &report))
        })
        .collect()
}

/// Aggregate for one (strategy, sweep point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Group {
    pub strategy: &'static str,
    pub sweep_value: String,
    pub runs: usize,
    /// Geometric means of baseline / strategy over matching runs.
    pub speedup: Option<f64>,
    pub traffic_reduction: Option<f64>,
    pub energy_reduction: Option<f64>,
    pub mean_parent_traffic: f64,
    pub mean_overbooking_rate: f64,
    /// Mean absolute gap between realized overbooking rate and `y`.
    pub overbooking_mae: f64,
    pub mean_reuse_fraction: f64,
    pub mean_bumped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub baseline: &'static str,
    pub sweep_axis: &'static str,
    pub runs: usize,
    pub groups: Vec<Group>,
}

pub const SCHEMA_VERSION: u32 = 1;

pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| v.is_nan() || v <= 0.0 || v.is_infinite()) {
        return None;
    }
    Some((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn summarize(spec: &ExperimentSpec, rows: &[Row]) -> Summary {
    let baseline = spec.baseline().name();
    let key = |r: &Row| (r.workload.clone(), r.sweep_value.clone(), r.seed);
    let base: BTreeMap<_, &Row> = rows.iter().filter(|r| r.strategy == baseline).map(|r| (key(r), r)).collect();
    let mut groups = Vec::new();
    for &strategy in &spec.strategies {
        for point in spec.sweep.points() {
            let label = point.label();
            let members: Vec<&Row> =
                rows.iter().filter(|r| r.strategy == strategy.name() && r.sweep_value == label).collect();
            let ratio = |f: fn(&Row) -> f64| {
                let v: Vec<f64> = members.iter().filter_map(|r| base.get(&key(r)).map(|b| f(b) / f(r))).collect();
                geometric_mean(&v)
            };
            groups.push(Group {
                strategy: strategy.name(),
                sweep_value: label,
                runs: members.len(),
                speedup: ratio(|r| r.cycles),
                traffic_reduction: ratio(|r| r.parent_traffic as f64),
                energy_reduction: ratio(|r| r.energy),
                mean_parent_traffic: mean(members.iter().map(|r| r.parent_traffic as f64)),
                mean_overbooking_rate: mean(members.iter().map(|r| r.overbooking_rate)),
                overbooking_mae: mean(members.iter().map(|r| (r.overbooking_rate - r.y).abs())),
                mean_reuse_fraction: mean(members.iter().map(|r| r.reuse_fraction)),
                mean_bumped_fraction: mean(members.iter().map(|r| r.bumped_fraction)),
            });
        }
    }
    Summary { schema_version: SCHEMA_VERSION, baseline, sweep_axis: spec.sweep.axis(), runs: rows.len(), groups }
}

/// Exhaustive occupancy report for one tiling of a workload.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileStats {
    pub schema_version: u32,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub shape: TileShape,
    pub tiles: usize,
    pub capacity: usize,
    pub max_occupancy: usize,
    pub mean_occupancy: f64,
    pub fraction_fitting: f64,
    /// `(occupancy, tile count)`, ascending.
    pub histogram: Vec<(usize, usize)>,
    /// `(occupancy, fraction of tiles at or below it)`.
    pub cdf: Vec<(usize, f64)>,
}

pub fn tile_stats(m: &SparseMatrix, shape: TileShape, capacity: usize) -> TileStats {
    let dist = tiling::occupancy_histogram(m, shape);
    TileStats {
        schema_version: SCHEMA_VERSION,
        rows: m.rows(),
        cols: m.cols(),
        nnz: m.nnz(),
        shape: dist.shape,
        tiles: dist.len(),
        capacity,
        max_occupancy: dist.max(),
        mean_occupancy: dist.mean(),
        fraction_fitting: 1.0 - dist.fraction_exceeding(capacity),
        histogram: dist.histogram(),
        cdf: dist.cdf(),
    }
}

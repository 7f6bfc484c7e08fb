//! Tiled SpMSpM traffic engine over a parent store and two operand buffers.
//!
//! `Z = A · B` with A (M×K) stationary: for every A tile, in row-major tile
//! order, every B tile sharing its K range is visited in N order. Within a
//! pair the A tile is traversed once and the B tile once per nonempty A row
//! (each row of A intersects against every column of the B tile). Tiles
//! enter their buffer in coordinate order; accesses follow index order.
//!
//! Timing and energy are proxies: a roofline max of compute and traffic
//! time, and a dot product of access counts with a per-access energy table.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::buffer::channel::{AnyChannel, BuffetChannel, ChannelStats, TailorChannel, TileChannel};
use crate::swiftiles::{self, Sampling, SwiftilesConfig};
use crate::tiling::{self, Operand, TileGrid, TileShape};
use crate::util::ceil_tolerant;
use crate::{Error, Result, SparseMatrix};

/// How tile shapes are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Strategy {
    /// Fixed square-ish shape sized to capacity: fits even if dense.
    UniformShape,
    /// Largest ladder size whose worst observed tile fits.
    Prescient,
    /// Statistical estimate allowing a `y` fraction of tiles to overbook.
    SwiftilesOverbook,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::UniformShape, Strategy::Prescient, Strategy::SwiftilesOverbook];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::UniformShape => "uniform-shape",
            Strategy::Prescient => "prescient",
            Strategy::SwiftilesOverbook => "swiftiles-overbook",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Buffer management idiom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Idiom {
    Buffet,
    Tailor,
}

impl Idiom {
    pub fn name(&self) -> &'static str {
        match self {
            Idiom::Buffet => "buffet",
            Idiom::Tailor => "tailor",
        }
    }
}

/// Energy per access, arbitrary units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyTable {
    pub parent_access: f64,
    pub buffer_read: f64,
    pub buffer_write: f64,
}

impl Default for EnergyTable {
    fn default() -> Self {
        Self { parent_access: 100.0, buffer_read: 1.0, buffer_write: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BufferConfig {
    /// Capacity in nonzeros.
    pub capacity: usize,
    /// FIFO-managed region size; derived from the round-trip latency when
    /// unset.
    pub fifo_len: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub a: BufferConfig,
    pub b: BufferConfig,
    pub idiom: Idiom,
    pub strategy: Strategy,
    pub y: f64,
    pub sampling: Sampling,
    pub seed: u64,
    /// Parent bandwidth in words per cycle.
    pub bandwidth: f64,
    /// Effectual multiplies per cycle.
    pub compute_throughput: f64,
    /// Parent round trip in cycles; `ceil(latency · bandwidth)` sizes the
    /// default FIFO region.
    pub round_trip_latency: f64,
    /// Words moved per nonzero (coordinate + value).
    pub words_per_nonzero: usize,
    /// A rows the compute array serves from one traversal of the B tile;
    /// 1 is a single intersection unit.
    pub rows_per_pass: usize,
    pub energy: EnergyTable,
    /// Prescient candidate sizes; a geometric ladder from capacity when
    /// unset.
    pub ladder: Option<Vec<usize>>,
    /// Candidate sizes per doubling for the default prescient ladder.
    pub ladder_steps: u32,
}

impl SimConfig {
    /// Both operand buffers with `capacity` and defaults elsewhere.
    pub fn new(capacity: usize) -> Self {
        let buf = BufferConfig { capacity, fifo_len: None };
        Self {
            a: buf,
            b: buf,
            idiom: Idiom::Tailor,
            strategy: Strategy::SwiftilesOverbook,
            y: 0.10,
            sampling: Sampling::Positives(10),
            seed: 0,
            bandwidth: 1.0,
            compute_throughput: 4.0,
            round_trip_latency: 4.0,
            words_per_nonzero: 2,
            rows_per_pass: 16,
            energy: EnergyTable::default(),
            ladder: None,
            ladder_steps: 1,
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_idiom(mut self, idiom: Idiom) -> Self {
        self.idiom = idiom;
        self
    }

    pub fn with_y(mut self, y: f64) -> Self {
        self.y = y;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_fifo_len(mut self, fifo_len: usize) -> Self {
        self.a.fifo_len = Some(fifo_len);
        self.b.fifo_len = Some(fifo_len);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.capacity == 0 || self.b.capacity == 0 {
            return Err(Error::InvalidConfig("buffer capacities must be at least 1"));
        }
        if matches!(self.a.fifo_len, Some(0)) || matches!(self.b.fifo_len, Some(0)) {
            return Err(Error::InvalidConfig("FIFO region must be at least 1"));
        }
        if !(self.bandwidth > 0.0) || !(self.compute_throughput > 0.0) {
            return Err(Error::InvalidConfig("bandwidth and throughput must be positive"));
        }
        if !(self.round_trip_latency >= 0.0) {
            return Err(Error::InvalidConfig("round-trip latency must be non-negative"));
        }
        if self.words_per_nonzero == 0 || self.rows_per_pass == 0 {
            return Err(Error::InvalidConfig("words per nonzero and rows per pass must be at least 1"));
        }
        let e = self.energy;
        if !(e.parent_access >= 0.0 && e.buffer_read >= 0.0 && e.buffer_write >= 0.0) {
            return Err(Error::InvalidConfig("energy entries must be non-negative"));
        }
        self.swiftiles(self.a.capacity).validate()
    }

    /// FIFO region size for `buf`, clamped into `1..=capacity`.
    pub fn fifo_len(&self, buf: &BufferConfig) -> usize {
        buf.fifo_len
            .unwrap_or_else(|| ceil_tolerant(self.round_trip_latency * self.bandwidth))
            .clamp(1, buf.capacity)
    }

    pub fn swiftiles(&self, capacity: usize) -> SwiftilesConfig {
        SwiftilesConfig { y: self.y, sampling: self.sampling, seed: self.seed, capacity }
    }

    fn buffer(&self, operand: Operand) -> &BufferConfig {
        match operand {
            Operand::A => &self.a,
            Operand::B => &self.b,
        }
    }
}

/// Estimator fields carried into reports.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateSummary {
    pub initial_size: usize,
    pub samples: usize,
    pub qy: usize,
    pub target_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub strategy: Strategy,
    pub idiom: Idiom,
    pub shape_a: TileShape,
    pub shape_b: TileShape,
    pub tiles_a: usize,
    pub tiles_b: usize,
    pub pairs: u64,
    pub first_fetches: u64,
    pub refetches: u64,
    /// Operand nonzeros fetched from the parent, first fetches + refetches.
    pub parent_traffic: u64,
    pub output_elements: u64,
    /// Words crossing the parent boundary, outputs included.
    pub traffic_words: u64,
    pub effectual_multiplies: u64,
    pub reuse_fraction: f64,
    pub bumped_fraction: f64,
    /// Fraction of all A and B tiles whose occupancy exceeds their buffer.
    pub overbooking_rate: f64,
    pub overbooking_rate_a: f64,
    pub overbooking_rate_b: f64,
    pub cycles: f64,
    pub energy: f64,
    pub a: ChannelStats,
    pub b: ChannelStats,
    pub estimate_a: Option<EstimateSummary>,
    pub estimate_b: Option<EstimateSummary>,
}

impl SimReport {
    /// Streaming overhead: refetched over first-fetched nonzeros.
    pub fn refetch_overhead(&self) -> f64 {
        if self.first_fetches == 0 {
            0.0
        } else {
            self.refetches as f64 / self.first_fetches as f64
        }
    }
}

/// `(bumped fraction, reuse fraction)` of a completed run.
pub fn reuse_vs_bumped(report: &SimReport) -> (f64, f64) {
    (report.bumped_fraction, report.reuse_fraction)
}

/// A-stationary tile-pair order over two grids sharing their K tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schedule {
    pub a_grid: TileGrid,
    pub b_grid: TileGrid,
}

/// One scheduled `(A tile, B tile)` pair, by tile ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TilePair {
    pub a: usize,
    pub b: usize,
}

impl Schedule {
    pub fn len(&self) -> usize {
        self.a_grid.len() * self.b_grid.tile_cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pairs in schedule order; all pairs of one A tile are contiguous.
    pub fn pairs(&self) -> impl Iterator<Item = TilePair> + '_ {
        let n_tiles = self.b_grid.tile_cols();
        let k_tiles = self.a_grid.tile_cols();
        (0..self.a_grid.len()).flat_map(move |a| {
            let k_tile = a % k_tiles;
            (0..n_tiles).map(move |j| TilePair { a, b: self.b_grid.index_of(k_tile, j) })
        })
    }
}

/// Build the A-stationary schedule. Both shapes must cover the same K range.
pub fn build_schedule(
    a: &SparseMatrix,
    b: &SparseMatrix,
    shape_a: TileShape,
    shape_b: TileShape,
) -> Result<Schedule> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch { a_cols: a.cols(), b_rows: b.rows() });
    }
    let a_grid = tiling::partition(a, shape_a);
    let b_grid = tiling::partition(b, shape_b);
    let (a_k, b_k) = (a_grid.shape().cols, b_grid.shape().rows);
    if a_k != b_k {
        return Err(Error::ShapeMismatch { a_k, b_k });
    }
    Ok(Schedule { a_grid, b_grid })
}

/// Nonzeros per K coordinate inside a tile, as sorted `(k, count)`.
type KProfile = Vec<(usize, u32)>;

fn a_profile(a: &SparseMatrix, rows: Range<usize>, cols: Range<usize>) -> KProfile {
    let mut ks: Vec<usize> = rows
        .flat_map(|r| {
            let row = a.row(r);
            let lo = row.partition_point(|&c| c < cols.start);
            let hi = row.partition_point(|&c| c < cols.end);
            row[lo..hi].iter().copied()
        })
        .collect();
    ks.sort_unstable();
    collapse(&ks)
}

fn b_profile(b: &SparseMatrix, rows: Range<usize>, cols: Range<usize>) -> KProfile {
    rows.filter_map(|k| {
        let row = b.row(k);
        let n = row.partition_point(|&c| c < cols.end) - row.partition_point(|&c| c < cols.start);
        (n > 0).then_some((k, n as u32))
    })
    .collect()
}

fn collapse(sorted: &[usize]) -> KProfile {
    let mut out: KProfile = Vec::new();
    for &k in sorted {
        match out.last_mut() {
            Some((last, n)) if *last == k => *n += 1,
            _ => out.push((k, 1)),
        }
    }
    out
}

/// Coordinate-merge of two K profiles: Σ_k countA(k) · countB(k).
fn merge_profiles(pa: &[(usize, u32)], pb: &[(usize, u32)]) -> u64 {
    let (mut i, mut j, mut total) = (0, 0, 0u64);
    while i < pa.len() && j < pb.len() {
        match pa[i].0.cmp(&pb[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                total += pa[i].1 as u64 * pb[j].1 as u64;
                i += 1;
                j += 1;
            }
        }
    }
    total
}

/// Effectual multiplies between an A window and a B window:
/// Σ over shared k of (nonzeros of A's column k) · (nonzeros of B's row k).
pub fn intersect_count(
    a: &SparseMatrix,
    a_window: (Range<usize>, Range<usize>),
    b: &SparseMatrix,
    b_window: (Range<usize>, Range<usize>),
) -> u64 {
    let pa = a_profile(a, a_window.0, a_window.1);
    let pb = b_profile(b, b_window.0, b_window.1);
    merge_profiles(&pa, &pb)
}

/// Number of structurally nonzero outputs of `a · b`.
pub fn output_nnz(a: &SparseMatrix, b: &SparseMatrix) -> u64 {
    let mut marker = vec![usize::MAX; b.cols()];
    let mut total = 0u64;
    for r in 0..a.rows() {
        for &k in a.row(r) {
            for &n in b.row(k) {
                if marker[n] != r {
                    marker[n] = r;
                    total += 1;
                }
            }
        }
    }
    total
}

/// Pick tile shapes for both operands according to `cfg.strategy`.
pub fn choose_shapes(
    a: &SparseMatrix,
    b: &SparseMatrix,
    cfg: &SimConfig,
) -> Result<(TileShape, TileShape, Option<EstimateSummary>, Option<EstimateSummary>)> {
    let pick = |m: &SparseMatrix, operand: Operand| -> Result<(TileShape, Option<EstimateSummary>)> {
        let capacity = cfg.buffer(operand).capacity;
        match cfg.strategy {
            Strategy::UniformShape => Ok((tiling::dense_fit_shape(capacity, m.rows(), m.cols()), None)),
            Strategy::Prescient => {
                let default;
                let ladder = match &cfg.ladder {
                    Some(l) => l.as_slice(),
                    None => {
                        default = tiling::geometric_ladder(capacity, m.size(), cfg.ladder_steps);
                        default.as_slice()
                    }
                };
                Ok((tiling::prescient_tile_size(m, capacity, ladder, operand)?, None))
            }
            Strategy::SwiftilesOverbook => {
                let r = swiftiles::estimate_tile_size(m, &cfg.swiftiles(capacity), operand)?;
                let summary = EstimateSummary {
                    initial_size: r.initial_size,
                    samples: r.sampled.len(),
                    qy: r.qy,
                    target_size: r.target_size,
                };
                Ok((r.shape, Some(summary)))
            }
        }
    };
    let (sa, ea) = pick(a, Operand::A)?;
    let (sb, eb) = pick(b, Operand::B)?;
    Ok((sa, sb, ea, eb))
}

/// Make both shapes agree on the K range by narrowing the wider one.
pub fn reconcile_k(shape_a: TileShape, shape_b: TileShape) -> (TileShape, TileShape) {
    let k = shape_a.cols.min(shape_b.rows);
    (TileShape { cols: k, ..shape_a }, TileShape { rows: k, ..shape_b })
}

/// Choose shapes per strategy and run the tiled dataflow.
pub fn simulate(a: &SparseMatrix, b: &SparseMatrix, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch { a_cols: a.cols(), b_rows: b.rows() });
    }
    let (sa, sb, ea, eb) = choose_shapes(a, b, cfg)?;
    let mut report = simulate_with_shapes(a, b, sa, sb, cfg)?;
    report.estimate_a = ea;
    report.estimate_b = eb;
    Ok(report)
}

/// Run the tiled dataflow with explicit shapes (K ranges reconciled first).
pub fn simulate_with_shapes(
    a: &SparseMatrix,
    b: &SparseMatrix,
    shape_a: TileShape,
    shape_b: TileShape,
    cfg: &SimConfig,
) -> Result<SimReport> {
    cfg.validate()?;
    let (shape_a, shape_b) = reconcile_k(
        clamp_shape(shape_a, a),
        clamp_shape(shape_b, b),
    );
    let schedule = build_schedule(a, b, shape_a, shape_b)?;
    let (a_grid, b_grid) = (schedule.a_grid, schedule.b_grid);

    let occ_a = tiling::all_occupancies(a, &a_grid);
    let occ_b = tiling::all_occupancies(b, &b_grid);
    let prof_a: Vec<KProfile> = (0..a_grid.len())
        .map(|t| {
            let (r, c) = a_grid.window_unchecked(t);
            a_profile(a, r, c)
        })
        .collect();
    let prof_b: Vec<KProfile> = (0..b_grid.len())
        .map(|t| {
            let (r, c) = b_grid.window_unchecked(t);
            b_profile(b, r, c)
        })
        .collect();
    let rows_a: Vec<usize> = (0..a_grid.len())
        .map(|t| {
            let (rows, cols) = a_grid.window_unchecked(t);
            rows.filter(|&r| a.count_in_window_unchecked(r..r + 1, cols.clone()) > 0).count()
        })
        .collect();

    let mut ch_a = make_channel(cfg, &cfg.a)?;
    let mut ch_b = make_channel(cfg, &cfg.b)?;
    let mut multiplies = 0u64;
    let mut pairs = 0u64;
    for pair in schedule.pairs() {
        pairs += 1;
        let (oa, ob) = (occ_a[pair.a], occ_b[pair.b]);
        if oa == 0 || ob == 0 {
            continue;
        }
        if ch_a.loaded_tile() != Some(pair.a) {
            ch_a.load_tile(pair.a, oa);
        }
        ch_a.scan();
        if ch_b.loaded_tile() != Some(pair.b) {
            ch_b.load_tile(pair.b, ob);
        }
        ch_b.scan_repeated(rows_a[pair.a].div_ceil(cfg.rows_per_pass));
        multiplies += merge_profiles(&prof_a[pair.a], &prof_b[pair.b]);
    }

    let (sa, sb) = (*ch_a.stats(), *ch_b.stats());
    let mut both = sa;
    both.merge(&sb);
    let over_a = occ_a.iter().filter(|&&o| o > cfg.a.capacity).count();
    let over_b = occ_b.iter().filter(|&&o| o > cfg.b.capacity).count();
    let output_elements = output_nnz(a, b);
    let wpn = cfg.words_per_nonzero as u64;
    let traffic_words = (both.parent_traffic() + output_elements) * wpn;
    let cycles = (multiplies as f64 / cfg.compute_throughput).max(traffic_words as f64 / cfg.bandwidth);
    let e = cfg.energy;
    let energy = e.parent_access * traffic_words as f64
        + e.buffer_write * ((both.fills + both.owfills) * wpn) as f64
        + e.buffer_read * (both.reads * wpn) as f64;

    Ok(SimReport {
        strategy: cfg.strategy,
        idiom: cfg.idiom,
        shape_a: a_grid.shape(),
        shape_b: b_grid.shape(),
        tiles_a: a_grid.len(),
        tiles_b: b_grid.len(),
        pairs,
        first_fetches: both.first_fetches,
        refetches: both.refetches,
        parent_traffic: both.parent_traffic(),
        output_elements,
        traffic_words,
        effectual_multiplies: multiplies,
        reuse_fraction: both.reuse_fraction(),
        bumped_fraction: both.bumped_fraction(),
        overbooking_rate: ratio(over_a + over_b, a_grid.len() + b_grid.len()),
        overbooking_rate_a: ratio(over_a, a_grid.len()),
        overbooking_rate_b: ratio(over_b, b_grid.len()),
        cycles,
        energy,
        a: sa,
        b: sb,
        estimate_a: None,
        estimate_b: None,
    })
}

/// Replay `traversals` scans of every nonempty tile of `m` through one
/// buffer. Isolates the repeated-scan behaviour from the dataflow.
pub fn scan_tiles(
    m: &SparseMatrix,
    shape: TileShape,
    cfg: &SimConfig,
    traversals: usize,
) -> Result<ChannelStats> {
    cfg.validate()?;
    let grid = tiling::partition(m, shape);
    let mut ch = make_channel(cfg, &cfg.a)?;
    for (t, &occ) in tiling::all_occupancies(m, &grid).iter().enumerate() {
        if occ > 0 {
            ch.load_tile(t, occ);
            ch.scan_repeated(traversals);
        }
    }
    Ok(*ch.stats())
}

fn make_channel(cfg: &SimConfig, buf: &BufferConfig) -> Result<AnyChannel> {
    let bad = |_| Error::InvalidConfig("buffer configuration");
    Ok(match cfg.idiom {
        Idiom::Buffet => AnyChannel::Buffet(BuffetChannel::new(buf.capacity).map_err(bad)?),
        Idiom::Tailor => AnyChannel::Tailor(TailorChannel::new(buf.capacity, cfg.fifo_len(buf)).map_err(bad)?),
    })
}

fn clamp_shape(shape: TileShape, m: &SparseMatrix) -> TileShape {
    TileShape { rows: shape.rows.min(m.rows().max(1)), cols: shape.cols.min(m.cols().max(1)) }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};

    fn six_by_six() -> SparseMatrix {
        SparseMatrix::from_coords(6, 6, &[(0, 0), (0, 5), (2, 2), (3, 3), (5, 1), (5, 5)]).unwrap()
    }

    fn brute_multiplies(a: &SparseMatrix, b: &SparseMatrix) -> u64 {
        let mut n = 0;
        for i in 0..a.rows() {
            for k in 0..a.cols() {
                if !a.row(i).contains(&k) {
                    continue;
                }
                for j in 0..b.cols() {
                    if b.row(k).contains(&j) {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    #[test]
    fn schedule_shapes() {
        let a = SparseMatrix::dense(4, 4);
        let b = SparseMatrix::dense(4, 6);
        let s = build_schedule(&a, &b, TileShape { rows: 4, cols: 4 }, TileShape { rows: 4, cols: 2 }).unwrap();
        assert_eq!(s.len(), 3);
        let s = build_schedule(&a, &b, TileShape { rows: 2, cols: 4 }, TileShape { rows: 4, cols: 3 }).unwrap();
        let pairs: Vec<_> = s.pairs().map(|p| (p.a, p.b)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(
            build_schedule(&a, &b, TileShape { rows: 2, cols: 2 }, TileShape { rows: 4, cols: 3 }),
            Err(Error::ShapeMismatch { a_k: 2, b_k: 4 })
        );
        let c = SparseMatrix::dense(3, 3);
        assert!(matches!(build_schedule(&a, &c, TileShape { rows: 1, cols: 1 }, TileShape { rows: 1, cols: 1 }), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn k_tiled_schedule_pairs_matching_chunks() {
        let a = SparseMatrix::dense(2, 4);
        let b = SparseMatrix::dense(4, 2);
        let s = build_schedule(&a, &b, TileShape { rows: 1, cols: 2 }, TileShape { rows: 2, cols: 1 }).unwrap();
        // A tiles: (row0,k0)=0, (row0,k1)=1, ...; B tiles: (k0,n0)=0,(k0,n1)=1,(k1,n0)=2,(k1,n1)=3
        let pairs: Vec<_> = s.pairs().map(|p| (p.a, p.b)).collect();
        assert_eq!(pairs, vec![(0, 0), (0, 1), (1, 2), (1, 3), (2, 0), (2, 1), (3, 2), (3, 3)]);
    }

    #[test]
    fn intersections() {
        let a = SparseMatrix::from_coords(2, 4, &[(0, 0), (1, 1)]).unwrap();
        let b = SparseMatrix::from_coords(4, 2, &[(2, 0), (3, 1)]).unwrap();
        assert_eq!(intersect_count(&a, (0..2, 0..4), &b, (0..4, 0..2)), 0);
        let d = SparseMatrix::dense(3, 5);
        let e = SparseMatrix::dense(5, 4);
        assert_eq!(intersect_count(&d, (0..3, 0..5), &e, (0..5, 0..4)), 60);
        let m = six_by_six();
        let t = m.transpose();
        assert_eq!(intersect_count(&m, (0..6, 0..6), &t, (0..6, 0..6)), brute_multiplies(&m, &t));
    }

    #[test]
    fn output_count_matches_dense_product() {
        let m = six_by_six();
        let t = m.transpose();
        let mut nz = 0;
        for i in 0..6 {
            for j in 0..6 {
                if (0..6).any(|k| m.row(i).contains(&k) && t.row(k).contains(&j)) {
                    nz += 1;
                }
            }
        }
        assert_eq!(output_nnz(&m, &t), nz);
    }

    #[test]
    fn fitting_tiles_have_no_bumps() {
        let m = generate(&GeneratorSpec::uniform(64, 64, 0.05, 1)).unwrap();
        let t = m.transpose();
        let cfg = SimConfig::new(m.nnz() + 1).with_strategy(Strategy::UniformShape);
        let r = simulate(&m, &t, &cfg).unwrap();
        assert_eq!(r.bumped_fraction, 0.0);
        assert_eq!(r.reuse_fraction, 1.0);
        assert_eq!(r.refetches, 0);
        assert_eq!(r.first_fetches, r.a.tile_elements + r.b.tile_elements);
        assert_eq!(r.effectual_multiplies, brute_multiplies(&m, &t));
    }

    #[test]
    fn multiplies_independent_of_tiling() {
        let m = generate(&GeneratorSpec::banded(48, 48, 3, 0.6, 0.02, 4)).unwrap();
        let t = m.transpose();
        let expected = brute_multiplies(&m, &t);
        for strategy in Strategy::ALL {
            for idiom in [Idiom::Buffet, Idiom::Tailor] {
                let cfg = SimConfig::new(12).with_strategy(strategy).with_idiom(idiom);
                let r = simulate(&m, &t, &cfg).unwrap();
                assert_eq!(r.effectual_multiplies, expected, "{strategy:?} {idiom:?}");
                assert_eq!(r.parent_traffic, r.first_fetches + r.refetches);
            }
        }
    }

    #[test]
    fn tailor_never_worse_than_buffet() {
        let m = generate(&GeneratorSpec::power_law(64, 64, 0.08, 1.3, 2)).unwrap();
        let t = m.transpose();
        let base = SimConfig::new(24).with_y(0.3);
        let tail = simulate(&m, &t, &base.clone().with_idiom(Idiom::Tailor)).unwrap();
        let buf = simulate(&m, &t, &base.with_idiom(Idiom::Buffet)).unwrap();
        assert_eq!(tail.shape_a, buf.shape_a);
        assert!(tail.parent_traffic <= buf.parent_traffic);
    }

    #[test]
    fn reconcile_narrows_wider_k() {
        let (a, b) = reconcile_k(TileShape { rows: 3, cols: 64 }, TileShape { rows: 16, cols: 5 });
        assert_eq!((a.cols, b.rows), (16, 16));
        assert_eq!((a.rows, b.cols), (3, 5));
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0).validate().is_err());
        assert!(SimConfig::new(8).with_fifo_len(0).validate().is_err());
        let mut c = SimConfig::new(8);
        c.energy.parent_access = -1.0;
        assert!(c.validate().is_err());
        let c = SimConfig::new(8);
        assert_eq!(c.fifo_len(&c.a), 4);
        let c = SimConfig::new(2);
        assert_eq!(c.fifo_len(&c.a), 2);
    }
}

//! One-shot statistical tile sizing.
//!
//! The estimator never traverses the whole tensor. It guesses a size from
//! the average density, measures a fixed budget of randomly chosen tiles at
//! that size, finds the occupancy that only a `y` fraction of them exceed,
//! and rescales the size linearly so that point lands on the buffer
//! capacity.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::tiling::{self, Operand, OccupancyDistribution, TileShape};
use crate::util::{ceil_tolerant, mul_div_round, round_nonneg};
use crate::{Error, Result, SparseMatrix};

/// How many tiles to measure at the initial size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Sampling {
    /// Draw enough tiles that about `k` of them land above the quantile:
    /// `ceil(k / y)` samples.
    Positives(usize),
    /// Measure every tile.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwiftilesConfig {
    /// Target fraction of tiles allowed to overbook, in `[0, 1]`. Zero asks
    /// for the sampled maximum and implies exhaustive sampling.
    pub y: f64,
    pub sampling: Sampling,
    pub seed: u64,
    /// Buffer capacity in nonzeros.
    pub capacity: usize,
}

impl SwiftilesConfig {
    /// Defaults: 10% overbooking, `k = 10`.
    pub fn new(capacity: usize) -> Self {
        Self { y: 0.10, sampling: Sampling::Positives(10), seed: 0, capacity }
    }

    pub fn with_y(mut self, y: f64) -> Self {
        self.y = y;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.sampling = Sampling::Positives(k);
        self
    }

    pub fn exhaustive(mut self) -> Self {
        self.sampling = Sampling::Exhaustive;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.y) {
            return Err(Error::InvalidConfig("y must lie in [0, 1]"));
        }
        if self.sampling == Sampling::Positives(0) {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("capacity must be at least 1"));
        }
        Ok(())
    }

    /// Number of tiles to sample, `None` meaning all of them.
    pub fn sample_budget(&self) -> Option<usize> {
        match self.sampling {
            Sampling::Exhaustive => None,
            Sampling::Positives(_) if self.y <= 0.0 => None,
            Sampling::Positives(k) => Some(ceil_tolerant(k as f64 / self.y)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwiftilesResult {
    pub initial_size: usize,
    pub initial_shape: TileShape,
    pub sampled: OccupancyDistribution,
    pub qy: usize,
    pub target_size: usize,
    pub shape: TileShape,
}

/// Initial size guess `round(b / s)` from capacity and nonzero density.
pub fn initial_estimate(capacity: usize, density: f64) -> Result<usize> {
    if capacity == 0 {
        return Err(Error::InvalidConfig("capacity must be at least 1"));
    }
    if !(density > 0.0) {
        return Err(Error::EmptyTensor);
    }
    if density > 1.0 {
        return Err(Error::InvalidConfig("density must lie in (0, 1]"));
    }
    Ok(round_nonneg(capacity as f64 / density))
}

/// Scale `initial_size` so the sampled quantile `qy` maps onto `capacity`:
/// `round(initial_size · capacity / qy)`.
pub fn scale_tile_size(initial_size: usize, capacity: usize, qy: usize) -> Result<usize> {
    if qy == 0 {
        return Err(Error::InvalidConfig("quantile must be positive to scale"));
    }
    Ok(mul_div_round(initial_size, capacity, qy))
}

/// Measure `n_samples` distinct tiles drawn uniformly at random; falls back
/// to every tile when the budget covers the grid.
pub fn sample_occupancies(
    m: &SparseMatrix,
    shape: TileShape,
    n_samples: usize,
    seed: u64,
) -> Result<OccupancyDistribution> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("at least one sample is required"));
    }
    let grid = tiling::partition(m, shape);
    if n_samples >= grid.len() {
        return Ok(tiling::occupancy_histogram(m, shape));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, grid.len(), n_samples);
    let samples: Vec<usize> = picks
        .iter()
        .map(|i| {
            let (rows, cols) = grid.window_unchecked(i);
            m.count_in_window_unchecked(rows, cols)
        })
        .collect();
    Ok(OccupancyDistribution { samples, shape: grid.shape(), exhaustive: false })
}

/// The occupancy at descending rank `max(1, ceil(y · n))`: at most a `y`
/// fraction of samples strictly exceed it. `y = 0` yields the maximum.
pub fn quantile_qy(dist: &OccupancyDistribution, y: f64) -> Result<usize> {
    if dist.is_empty() {
        return Err(Error::InvalidConfig("quantile of an empty distribution"));
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidConfig("y must lie in [0, 1]"));
    }
    let mut sorted = dist.samples.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let rank = ceil_tolerant(y * sorted.len() as f64).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// Run the full estimator on `m` playing `operand`.
pub fn estimate_tile_size(
    m: &SparseMatrix,
    cfg: &SwiftilesConfig,
    operand: Operand,
) -> Result<SwiftilesResult> {
    cfg.validate()?;
    let size = m.size();
    if size == 0 {
        return Err(Error::EmptyShape);
    }
    if m.nnz() == 0 {
        return Err(Error::EmptyTensor);
    }
    let b = cfg.capacity;
    // b / s with s = nnz / size, kept exact
    let initial_size = mul_div_round(b, size, m.nnz()).clamp(1, size);
    let initial_shape = tiling::size_to_shape(initial_size, m.rows(), m.cols(), operand);
    let sampled = match cfg.sample_budget() {
        Some(n) => sample_occupancies(m, initial_shape, n, cfg.seed)?,
        None => tiling::occupancy_histogram(m, initial_shape),
    };
    let qy = quantile_qy(&sampled, cfg.y)?;
    let target_size = if qy == 0 {
        size
    } else {
        scale_tile_size(initial_size, b, qy)?.max(b).min(size)
    };
    let shape = tiling::size_to_shape(target_size, m.rows(), m.cols(), operand);
    Ok(SwiftilesResult { initial_size, initial_shape, sampled, qy, target_size, shape })
}

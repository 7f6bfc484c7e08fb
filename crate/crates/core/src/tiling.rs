//! Coordinate-space tiling: uniform tile shapes, occupancy measurement, the
//! K-first size → shape policy and the prescient search.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::util::round_nonneg;
use crate::{Error, Result, SparseMatrix};

/// Which side of `Z = A · B` a matrix plays. A is stored M×K, B is K×N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Operand {
    A,
    B,
}

/// A uniform tile shape in the owning matrix's own row/column coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TileShape {
    pub rows: usize,
    pub cols: usize,
}

impl TileShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroRange);
        }
        Ok(Self { rows, cols })
    }

    /// Coordinate-space size (product of the ranges).
    pub fn size(&self) -> usize {
        self.rows * self.cols
    }

    /// Range along the shared K dimension.
    pub fn k_range(&self, operand: Operand) -> usize {
        match operand {
            Operand::A => self.cols,
            Operand::B => self.rows,
        }
    }

    /// Range along the operand's private dimension (M for A, N for B).
    pub fn free_range(&self, operand: Operand) -> usize {
        match operand {
            Operand::A => self.rows,
            Operand::B => self.cols,
        }
    }

    /// Build from (K range, free range) for an operand.
    pub fn for_operand(operand: Operand, k: usize, free: usize) -> Self {
        match operand {
            Operand::A => Self { rows: free, cols: k },
            Operand::B => Self { rows: k, cols: free },
        }
    }
}

/// The partition of a matrix induced by a uniform shape. Edge tiles are
/// ragged, never padded; tiles are numbered row-major over
/// `(tile_row, tile_col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGrid {
    rows: usize,
    cols: usize,
    shape: TileShape,
    tile_rows: usize,
    tile_cols: usize,
}

impl TileGrid {
    pub fn shape(&self) -> TileShape {
        self.shape
    }

    pub fn tile_rows(&self) -> usize {
        self.tile_rows
    }

    pub fn tile_cols(&self) -> usize {
        self.tile_cols
    }

    pub fn len(&self) -> usize {
        self.tile_rows * self.tile_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tile ordinal of `(tile_row, tile_col)`.
    pub fn index_of(&self, tile_row: usize, tile_col: usize) -> usize {
        tile_row * self.tile_cols + tile_col
    }

    /// Coordinate window of tile `index` as `(rows, cols)`.
    pub fn window(&self, index: usize) -> Result<(Range<usize>, Range<usize>)> {
        if index >= self.len() {
            return Err(Error::TileOutOfRange { index, tiles: self.len() });
        }
        Ok(self.window_unchecked(index))
    }

    pub(crate) fn window_unchecked(&self, index: usize) -> (Range<usize>, Range<usize>) {
        let (tr, tc) = (index / self.tile_cols, index % self.tile_cols);
        let r0 = tr * self.shape.rows;
        let c0 = tc * self.shape.cols;
        (
            r0..(r0 + self.shape.rows).min(self.rows),
            c0..(c0 + self.shape.cols).min(self.cols),
        )
    }
}

/// Partition `m` into tiles of `shape`. Ranges larger than the matrix clamp
/// to a single tile along that axis.
pub fn partition(m: &SparseMatrix, shape: TileShape) -> TileGrid {
    grid_for(m.rows(), m.cols(), shape)
}

pub(crate) fn grid_for(rows: usize, cols: usize, shape: TileShape) -> TileGrid {
    let shape = TileShape {
        rows: shape.rows.min(rows.max(1)),
        cols: shape.cols.min(cols.max(1)),
    };
    TileGrid {
        rows,
        cols,
        shape,
        tile_rows: rows.div_ceil(shape.rows),
        tile_cols: cols.div_ceil(shape.cols),
    }
}

/// Occupancy (nonzero count) of one tile.
pub fn tile_occupancy(m: &SparseMatrix, grid: &TileGrid, tile_index: usize) -> Result<usize> {
    let (rows, cols) = grid.window(tile_index)?;
    Ok(m.count_in_window_unchecked(rows, cols))
}

/// Occupancy of every tile, in tile order, in one pass over the nonzeros.
pub fn all_occupancies(m: &SparseMatrix, grid: &TileGrid) -> Vec<usize> {
    let mut counts = vec![0usize; grid.len()];
    let shape = grid.shape();
    for r in 0..m.rows() {
        let base = (r / shape.rows) * grid.tile_cols();
        for &c in m.row(r) {
            counts[base + c / shape.cols] += 1;
        }
    }
    counts
}

/// A collection of per-tile occupancies, either exhaustive or sampled.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OccupancyDistribution {
    pub samples: Vec<usize>,
    pub shape: TileShape,
    pub exhaustive: bool,
}

impl OccupancyDistribution {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max(&self) -> usize {
        self.samples.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> usize {
        self.samples.iter().copied().min().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<usize>() as f64 / self.samples.len() as f64
    }

    /// Fraction of samples with occupancy strictly above `capacity`.
    pub fn fraction_exceeding(&self, capacity: usize) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|&&o| o > capacity).count() as f64 / self.samples.len() as f64
    }

    /// `(occupancy, count)` pairs in ascending occupancy order.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let mut sorted = self.samples.clone();
        sorted.sort_unstable();
        let mut out: Vec<(usize, usize)> = Vec::new();
        for v in sorted {
            match out.last_mut() {
                Some((last, n)) if *last == v => *n += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }

    /// `(occupancy, P[X ≤ occupancy])` at every distinct occupancy.
    pub fn cdf(&self) -> Vec<(usize, f64)> {
        let n = self.samples.len() as f64;
        let mut acc = 0usize;
        self.histogram()
            .into_iter()
            .map(|(v, c)| {
                acc += c;
                (v, acc as f64 / n)
            })
            .collect()
    }
}

/// Exhaustive occupancy distribution: one sample per tile.
pub fn occupancy_histogram(m: &SparseMatrix, shape: TileShape) -> OccupancyDistribution {
    let grid = partition(m, shape);
    OccupancyDistribution { samples: all_occupancies(m, &grid), shape: grid.shape(), exhaustive: true }
}

/// Map a target tile size to a shape for `operand` of an `rows × cols`
/// matrix: fill the shared K range first, then spend what is left of the
/// size on the operand's private dimension.
pub fn size_to_shape(target_size: usize, rows: usize, cols: usize, operand: Operand) -> TileShape {
    let target = target_size.max(1);
    let (k_extent, free_extent) = match operand {
        Operand::A => (cols, rows),
        Operand::B => (rows, cols),
    };
    let k = target.min(k_extent.max(1));
    let free = (target / k).clamp(1, free_extent.max(1));
    TileShape::for_operand(operand, k, free)
}

/// Square-as-possible shape whose dense size fits `capacity`: side
/// `floor(sqrt(capacity))`, with any range clipped by the matrix handed to
/// the other dimension.
pub fn dense_fit_shape(capacity: usize, rows: usize, cols: usize) -> TileShape {
    let capacity = capacity.max(1);
    let side = libm::sqrt(capacity as f64) as usize;
    let side = if (side + 1) * (side + 1) <= capacity { side + 1 } else { side.max(1) };
    let r = side.min(rows.max(1));
    let c = (capacity / r).min(cols.max(1));
    let r = (capacity / c).min(rows.max(1));
    TileShape { rows: r, cols: c }
}

/// Fraction of ALL tiles (empty ones included) whose occupancy exceeds
/// `capacity`.
pub fn overbooking_rate(m: &SparseMatrix, shape: TileShape, capacity: usize) -> Result<f64> {
    if capacity == 0 {
        return Err(Error::InvalidConfig("capacity must be at least 1"));
    }
    Ok(occupancy_histogram(m, shape).fraction_exceeding(capacity))
}

/// Candidate sizes `capacity · 2^i` below the full operand size, followed by
/// the full size itself.
pub fn default_ladder(capacity: usize, full_size: usize) -> Vec<usize> {
    geometric_ladder(capacity, full_size, 1)
}

/// Sizes `round(capacity · 2^(i / steps))` below the full operand size,
/// deduplicated, followed by the full size. `steps = 1` is the power-of-two
/// ladder.
pub fn geometric_ladder(capacity: usize, full_size: usize, steps_per_doubling: u32) -> Vec<usize> {
    let base = capacity.max(1);
    let steps = steps_per_doubling.max(1);
    let mut ladder: Vec<usize> = Vec::new();
    for i in 0.. {
        let s = if i % steps == 0 {
            base.checked_shl(i / steps).filter(|s| s >> (i / steps) == base)
        } else {
            Some(round_nonneg(base as f64 * libm::exp2(i as f64 / steps as f64)))
        };
        match s {
            Some(s) if s < full_size => {
                if ladder.last() != Some(&s) {
                    ladder.push(s);
                }
            }
            _ => break,
        }
    }
    ladder.push(full_size.max(1));
    ladder
}

/// The largest ladder size whose worst-case tile occupancy fits
/// `capacity`, found by exhaustively measuring every candidate.
pub fn prescient_tile_size(
    m: &SparseMatrix,
    capacity: usize,
    ladder: &[usize],
    operand: Operand,
) -> Result<TileShape> {
    if capacity == 0 {
        return Err(Error::InvalidConfig("capacity must be at least 1"));
    }
    if ladder.is_empty() {
        return Err(Error::InvalidConfig("prescient ladder must not be empty"));
    }
    ladder
        .iter()
        .rev()
        .map(|&size| size_to_shape(size, m.rows(), m.cols(), operand))
        .find(|&shape| occupancy_histogram(m, shape).max() <= capacity)
        .ok_or(Error::NoFeasibleTile { capacity })
}

//! Buffer event logs for a single tile.

use overbook_core::buffer::channel::{BuffetChannel, TailorChannel, TileChannel};
use overbook_core::buffer::BufferEvent;
use overbook_core::sim::{Idiom, SimConfig};
use overbook_core::tiling::{self, TileShape};
use overbook_core::SparseMatrix;

use crate::error::CliError;

/// Index and occupancy of the fullest tile of `m` under `shape`.
pub fn fullest_tile(m: &SparseMatrix, shape: TileShape) -> (usize, usize) {
    let grid = tiling::partition(m, shape);
    tiling::all_occupancies(m, &grid)
        .into_iter()
        .enumerate()
        .max_by_key(|&(i, o)| (o, std::cmp::Reverse(i)))
        .unwrap_or((0, 0))
}

/// Event log of loading tile `tile` with `occupancy` elements into operand
/// A's buffer and scanning it `scans` times.
pub fn tile_trace(cfg: &SimConfig, tile: usize, occupancy: usize, scans: usize) -> Result<Vec<BufferEvent<usize>>, CliError> {
    let bad = |e| CliError::InvalidSpec(format!("buffer: {e}"));
    let trace = match cfg.idiom {
        Idiom::Tailor => {
            let mut ch = TailorChannel::with_trace(cfg.a.capacity, cfg.fifo_len(&cfg.a)).map_err(bad)?;
            ch.load_tile(tile, occupancy);
            ch.scan_repeated(scans);
            ch.trace().to_vec()
        }
        Idiom::Buffet => {
            let mut ch = BuffetChannel::with_trace(cfg.a.capacity).map_err(bad)?;
            ch.load_tile(tile, occupancy);
            ch.scan_repeated(scans);
            ch.trace().to_vec()
        }
    };
    Ok(trace)
}

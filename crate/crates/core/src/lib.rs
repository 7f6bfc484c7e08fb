//! Overbooked coordinate-space tiling for sparse matrix × sparse matrix
//! multiplication.
//!
//! The crate is split along the pipeline an accelerator would follow:
//!
//! - [`matrix`] and [`generate`]: compressed-row sparse matrices and seeded
//!   synthetic workloads.
//! - [`tiling`]: uniform-shape tiling, occupancy measurement, the K-first
//!   size → shape policy and the prescient (worst-case-fits) search.
//! - [`swiftiles`]: the one-shot statistical tile-size estimator.
//! - [`buffer`]: executable buffet and Tailor state machines plus the tile
//!   channels that drive them against a parent store.
//! - [`sim`]: the tiled SpMSpM traffic/reuse engine.
//!
//! Everything here is `no_std` + `alloc`; file formats and the CLI live in
//! the `overbook` crate.

#![cfg_attr(not(test), no_std)]
// negated float comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod buffer;
pub mod error;
pub mod generate;
pub mod matrix;
pub mod sim;
pub mod swiftiles;
pub mod tiling;

mod util;

pub use error::{Error, Result};
pub use matrix::SparseMatrix;

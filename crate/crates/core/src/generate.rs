//! Seeded synthetic sparse matrices.
//!
//! Every generator walks the rows in order and draws Bernoulli coordinates by
//! geometric skipping, so the cost is proportional to the nonzeros produced
//! and a `(spec, seed)` pair always yields the same matrix.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result, SparseMatrix};

/// Sparsity structure to synthesize.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum GeneratorKind {
    /// Every coordinate independently nonzero with probability `density`.
    UniformRandom { density: f64 },
    /// Dense-ish diagonal band of half-width `half_width` over a sparse
    /// background.
    Banded { half_width: usize, in_band: f64, off_band: f64 },
    /// Row degrees follow a Zipf-like law with the given exponent; rows are
    /// shuffled so heavy rows are scattered.
    PowerLawRows { density: f64, exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorSpec {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: GeneratorKind,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn uniform(rows: usize, cols: usize, density: f64, seed: u64) -> Self {
        Self { kind: GeneratorKind::UniformRandom { density }, rows, cols, seed }
    }

    pub fn banded(
        rows: usize,
        cols: usize,
        half_width: usize,
        in_band: f64,
        off_band: f64,
        seed: u64,
    ) -> Self {
        Self { kind: GeneratorKind::Banded { half_width, in_band, off_band }, rows, cols, seed }
    }

    pub fn power_law(rows: usize, cols: usize, density: f64, exponent: f64, seed: u64) -> Self {
        Self { kind: GeneratorKind::PowerLawRows { density, exponent }, rows, cols, seed }
    }

    /// Expected number of nonzeros the spec asks for.
    pub fn expected_nnz(&self) -> f64 {
        let (rows, cols) = (self.rows as f64, self.cols as f64);
        match self.kind {
            GeneratorKind::UniformRandom { density } | GeneratorKind::PowerLawRows { density, .. } => {
                density * rows * cols
            }
            GeneratorKind::Banded { half_width, in_band, off_band } => (0..self.rows)
                .map(|r| {
                    let band = band_range(r, self.rows, self.cols, half_width);
                    let inside = (band.1 - band.0) as f64;
                    inside * in_band + (cols - inside) * off_band
                })
                .sum(),
        }
    }

    fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        match self.kind {
            GeneratorKind::UniformRandom { density } if !unit(density) => {
                Err(Error::InvalidGenerator("density must lie in [0, 1]"))
            }
            GeneratorKind::Banded { in_band, off_band, .. } if !unit(in_band) || !unit(off_band) => {
                Err(Error::InvalidGenerator("band densities must lie in [0, 1]"))
            }
            GeneratorKind::PowerLawRows { density, exponent } if !unit(density) || !(exponent >= 0.0) => {
                Err(Error::InvalidGenerator("density must lie in [0, 1] and exponent be non-negative"))
            }
            _ if self.expected_nnz() > (self.rows * self.cols) as f64 => {
                Err(Error::InvalidGenerator("expected nnz exceeds rows * cols"))
            }
            _ => Ok(()),
        }
    }
}

/// Generate the matrix described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<SparseMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (rows, cols) = (spec.rows, spec.cols);
    let row_cols = match spec.kind {
        GeneratorKind::UniformRandom { density } => (0..rows)
            .map(|_| {
                let mut out = Vec::new();
                bernoulli_run(&mut rng, 0, cols, density, &mut out);
                out
            })
            .collect(),
        GeneratorKind::Banded { half_width, in_band, off_band } => (0..rows)
            .map(|r| {
                let (lo, hi) = band_range(r, rows, cols, half_width);
                let mut out = Vec::new();
                bernoulli_run(&mut rng, 0, lo, off_band, &mut out);
                bernoulli_run(&mut rng, lo, hi, in_band, &mut out);
                bernoulli_run(&mut rng, hi, cols, off_band, &mut out);
                out
            })
            .collect(),
        GeneratorKind::PowerLawRows { density, exponent } => {
            let probs = power_law_row_densities(&mut rng, rows, cols, density, exponent);
            probs
                .into_iter()
                .map(|p| {
                    let mut out = Vec::new();
                    bernoulli_run(&mut rng, 0, cols, p, &mut out);
                    out
                })
                .collect()
        }
    };
    Ok(SparseMatrix::from_sorted_rows(rows, cols, row_cols))
}

/// Column range `[lo, hi)` of the band in row `r`, following the scaled
/// diagonal for non-square shapes.
fn band_range(r: usize, rows: usize, cols: usize, half_width: usize) -> (usize, usize) {
    if rows == 0 || cols == 0 {
        return (0, 0);
    }
    let center = r * cols / rows;
    (center.saturating_sub(half_width), (center + half_width + 1).min(cols))
}

/// Append the Bernoulli(`p`) coordinates of `[lo, hi)` to `out`.
fn bernoulli_run<R: Rng>(rng: &mut R, lo: usize, hi: usize, p: f64, out: &mut Vec<usize>) {
    if p <= 0.0 || lo >= hi {
        return;
    }
    if p >= 1.0 {
        out.extend(lo..hi);
        return;
    }
    let log_q = libm::log1p(-p);
    let mut c = lo;
    loop {
        let u: f64 = rng.gen();
        let skip = libm::log(1.0 - u) / log_q;
        if skip >= (hi - c) as f64 {
            break;
        }
        c += skip as usize;
        if c >= hi {
            break;
        }
        out.push(c);
        c += 1;
    }
}

/// Per-row densities whose expected total matches `density · rows · cols`,
/// water-filling the excess of rows that would exceed a full row.
fn power_law_row_densities<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    density: f64,
    exponent: f64,
) -> Vec<f64> {
    let mut ranks: Vec<usize> = (0..rows).collect();
    ranks.shuffle(rng);
    let weights: Vec<f64> = ranks.iter().map(|&k| libm::pow(k as f64 + 1.0, -exponent)).collect();
    let full = cols as f64;
    let mut degree = alloc::vec![0.0; rows];
    let mut capped = alloc::vec![false; rows];
    let mut remaining = density * rows as f64 * full;
    loop {
        let open: Vec<usize> = (0..rows).filter(|&r| !capped[r]).collect();
        let open_weight: f64 = open.iter().map(|&r| weights[r]).sum();
        if open_weight <= 0.0 {
            break;
        }
        let budget = remaining;
        let mut newly_capped = false;
        for &r in &open {
            if budget * weights[r] / open_weight >= full {
                capped[r] = true;
                degree[r] = full;
                remaining -= full;
                newly_capped = true;
            }
        }
        if !newly_capped {
            for &r in &open {
                degree[r] = remaining * weights[r] / open_weight;
            }
            break;
        }
    }
    degree.into_iter().map(|d| if cols == 0 { 0.0 } else { d / full }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_density_concentrates() {
        let m = generate(&GeneratorSpec::uniform(1000, 1000, 0.01, 7)).unwrap();
        assert!((9000..=11000).contains(&m.nnz()), "nnz = {}", m.nnz());
    }

    #[test]
    fn degenerate_band_is_identity() {
        let m = generate(&GeneratorSpec::banded(100, 100, 0, 1.0, 0.0, 3)).unwrap();
        assert_eq!(m, SparseMatrix::identity(100));
    }

    #[test]
    fn same_seed_same_matrix() {
        for spec in [
            GeneratorSpec::uniform(200, 300, 0.05, 11),
            GeneratorSpec::banded(200, 200, 5, 0.5, 0.01, 11),
            GeneratorSpec::power_law(200, 200, 0.02, 1.2, 11),
        ] {
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
        let a = generate(&GeneratorSpec::uniform(200, 200, 0.05, 1)).unwrap();
        let b = generate(&GeneratorSpec::uniform(200, 200, 0.05, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_bad_densities() {
        assert!(generate(&GeneratorSpec::uniform(10, 10, 1.5, 0)).is_err());
        assert!(generate(&GeneratorSpec::uniform(10, 10, -0.1, 0)).is_err());
        assert!(generate(&GeneratorSpec::banded(10, 10, 1, 0.5, 2.0, 0)).is_err());
        assert!(generate(&GeneratorSpec::power_law(10, 10, 0.1, f64::NAN, 0)).is_err());
    }

    #[test]
    fn power_law_keeps_total_density() {
        let spec = GeneratorSpec::power_law(1000, 1000, 0.01, 1.5, 5);
        let m = generate(&spec).unwrap();
        let d = m.density().unwrap();
        assert!((d - 0.01).abs() / 0.01 < 0.05, "density {d}");
        // heavy rows exist
        let max_row = (0..1000).map(|r| m.row(r).len()).max().unwrap();
        assert!(max_row > 200, "max row {max_row}");
    }

    #[test]
    fn banded_density_matches_expectation() {
        let spec = GeneratorSpec::banded(1000, 1000, 10, 0.5, 0.002, 9);
        let m = generate(&spec).unwrap();
        let expected = spec.expected_nnz();
        let rel = (m.nnz() as f64 - expected).abs() / expected;
        assert!(rel < 0.05, "nnz {} vs {expected}", m.nnz());
    }
}

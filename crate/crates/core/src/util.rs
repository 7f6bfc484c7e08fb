//! Float helpers that `core` does not provide.

// Slack for products like 0.1 * 30 that land a hair above an integer.
const CEIL_SLACK: f64 = 1e-9;

/// `ceil(x)` for non-negative finite `x`, forgiving representation error.
pub(crate) fn ceil_tolerant(x: f64) -> usize {
    let floor = x as usize;
    if x - floor as f64 > CEIL_SLACK {
        floor + 1
    } else {
        floor
    }
}

/// Round half away from zero for non-negative `x`.
pub(crate) fn round_nonneg(x: f64) -> usize {
    (x + 0.5) as usize
}

/// `round(num * mul / den)` in exact integer arithmetic.
pub(crate) fn mul_div_round(num: usize, mul: usize, den: usize) -> usize {
    let (n, m, d) = (num as u128, mul as u128, den as u128);
    ((2 * n * m + d) / (2 * d)) as usize
}

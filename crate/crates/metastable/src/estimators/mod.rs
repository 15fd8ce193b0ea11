//! Path statistics and Monte-Carlo machinery.
//!
//! Single-trace statistics are pure functions of the sampled values:
//! fluctuation counts, interval crossings, window oscillation events and
//! horizon suprema. The Monte-Carlo runners sample paths with seeds derived
//! deterministically from a base seed and aggregate in fixed index order,
//! so estimates are bit-identical at any level of parallelism.

mod mc;
mod scheme;

pub use mc::{mc_expectation, mc_probability, mc_vector, CiMethod, Estimate, McSettings, CI_Z};
pub use scheme::{IntervalScheme, Window};

use thiserror::Error;

/// Errors from estimators.
#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("trace is empty")]
    EmptyTrace,

    #[error("crossing interval needs 0 <= a < b, got [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },

    #[error("window [{lo}; {hi}] exceeds the trace length {len}")]
    WindowOutOfRange { lo: u64, hi: u64, len: usize },

    #[error("need at least one path, got 0")]
    NoPaths,

    #[error("interval scheme windows must satisfy a_0 < b_0 <= a_1 < b_1 <= ...")]
    BadScheme,

    #[error("interval scheme is empty")]
    EmptyScheme,
}

/// Counts of completed interval crossings.
///
/// `crossings` counts completed traversals of `[a, b]` in either direction;
/// `downcrossings` counts the downward ones. Between two downcrossings
/// there is exactly one upcrossing, so `crossings <= 2·downcrossings + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingCount {
    pub crossings: u64,
    pub downcrossings: u64,
}

/// Maximum number of disjoint ε-fluctuations: pairs
/// `i_1 < j_1 <= i_2 < j_2 <= ...` with `|x_{i_l} - x_{j_l}| >= eps`.
///
/// Greedy earliest-completion: repeatedly take the first index `j` at which
/// some earlier index of the current segment differs by at least `eps`,
/// then restart the segment at `j`. Earliest-completion is maximal for this
/// interval-scheduling structure; the exhaustive test oracle enforces that
/// rather than assuming it.
pub fn count_fluctuations(values: &[f64], eps: f64) -> usize {
    assert!(eps > 0.0, "eps must be positive");
    let mut count = 0usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in values {
        if x - lo >= eps || hi - x >= eps {
            count += 1;
            lo = x;
            hi = x;
        } else {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    count
}

/// Crossing counts of the interval `[a, b]` with strict boundary
/// semantics: the state flips only on values strictly below `a` or strictly
/// above `b`; values landing inside `[a, b]` change nothing.
pub fn count_crossings(values: &[f64], a: f64, b: f64) -> Result<CrossingCount, EstimatorError> {
    if !(0.0 <= a && a < b) {
        return Err(EstimatorError::BadInterval { a, b });
    }
    #[derive(PartialEq, Clone, Copy)]
    enum Side {
        Neither,
        Below,
        Above,
    }
    let mut side = Side::Neither;
    let mut crossings = 0u64;
    let mut downcrossings = 0u64;
    for &x in values {
        let here = if x < a {
            Side::Below
        } else if x > b {
            Side::Above
        } else {
            continue;
        };
        match (side, here) {
            (Side::Below, Side::Above) => crossings += 1,
            (Side::Above, Side::Below) => {
                crossings += 1;
                downcrossings += 1;
            }
            _ => {}
        }
        side = here;
    }
    Ok(CrossingCount {
        crossings,
        downcrossings,
    })
}

/// True iff the values over the inclusive index window `[lo; hi]` oscillate
/// by at least `eps` (max − min >= eps). Empty windows (`hi < lo`) are
/// false; windows reaching past the trace are an error.
pub fn oscillation_event(
    values: &[f64],
    window: Window,
    eps: f64,
) -> Result<bool, EstimatorError> {
    if window.hi < window.lo {
        return Ok(false);
    }
    if window.hi as usize >= values.len() {
        return Err(EstimatorError::WindowOutOfRange {
            lo: window.lo,
            hi: window.hi,
            len: values.len(),
        });
    }
    let slice = &values[window.lo as usize..=window.hi as usize];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in slice {
        lo = lo.min(x);
        hi = hi.max(x);
        if hi - lo >= eps {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `max_n |x_n|` over the whole trace.
pub fn sup_over_horizon(values: &[f64]) -> Result<f64, EstimatorError> {
    if values.is_empty() {
        return Err(EstimatorError::EmptyTrace);
    }
    Ok(values.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())))
}

//! The bound calculus.
//!
//! A *modulus* here is an evaluable bound function together with a
//! provenance tree recording the rule that built it:
//!
//! * [`BoundednessModulus`] — `ρ(λ)` with `P(sup_n |X_n| >= ρ(λ)) < λ`;
//! * [`LearnableRate`] — `φ(λ, ε)` bounding, for any increasing interval
//!   scheme, how many windows can carry oscillation probability `>= λ`;
//! * [`DeterministicRate`] — `φ(ε)` for plain real sequences;
//! * [`LiminfModulus`] — `Φ(λ, ε, n)` bounding the window after `n` within
//!   which a process drops below `ε` except with probability `< λ`;
//! * [`DriftModulus`] — `δ(ε, K)` transferring liminf information between
//!   paired processes;
//! * [`RateOfDivergence`] — `r(n, x)` with `sum_{i=n}^{n+r(n,x)} u_i >= x`
//!   for a step-size schedule;
//! * [`Counterfunction`] / [`ExtendedIndex`] — the iteration machinery that
//!   turns learnable rates into metastable search budgets.
//!
//! All values are immutable after construction and evaluation is pure, so
//! everything here can be shared and evaluated concurrently without any
//! synchronization.
//!
//! Bounds built from the composition rules re-evaluate bit-for-bit from
//! their serialized provenance (see [`Provenance`] and the `rebuild_*`
//! functions); only `custom` closures are opaque.

mod boundedness;
mod counterfunction;
mod deterministic;
mod liminf;
mod provenance;
mod rate;
mod robbins_siegmund;

pub use boundedness::{
    boundedness_from_direct_rate, product_boundedness, sum_boundedness, BoundednessModulus,
};
pub use counterfunction::{
    metastable_from_learnable, rm_metastable, Counterfunction, ExtendedIndex, MetastableBound,
    DEFAULT_COUNTERFUNCTION_CAP,
};
pub use deterministic::{monotone_learnable, nonstochastic_rs, DeterministicRate};
pub use liminf::{
    constant_step_solution_bound, delta_from_mu, liminf_modulus, liminf_transfer, DriftModulus,
    LiminfModulus, RateOfDivergence, DEFAULT_DIVERGENCE_SCAN_CAP,
};
pub use provenance::{rebuild_boundedness, rebuild_learnable_rate, Provenance};
pub use rate::{learnable_from_boundedness, product_learnable, sum_learnable, LearnableRate};
pub use robbins_siegmund::{
    rs_bsum_boundedness, rs_learnable_closed, rs_learnable_pipeline, rs_u_boundedness, rs_u_rate,
    rs_x_boundedness, rs_xtilde_boundedness, rs_xtilde_rate, supermartingale_learnable,
    RS_CLOSED_CONSTANT, SUPERMARTINGALE_CONSTANT,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from constructing or evaluating bound functions.
#[derive(Debug, Error)]
pub enum ModuliError {
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),

    #[error("accuracy must lie in (0, 1), got {0}")]
    InvalidAccuracy(f64),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{what} must exceed {threshold}, got {value}")]
    TooSmall {
        what: &'static str,
        threshold: f64,
        value: f64,
    },

    #[error("malformed modulus: {0}")]
    MalformedModulus(String),

    #[error("drift modulus evaluated to a nonpositive value {value} at (eps={eps}, k={k})")]
    NonPositiveDrift { value: f64, eps: f64, k: f64 },

    #[error("step-size partial sums did not reach {target} within {cap} terms from index {from}")]
    DivergenceScanExhausted { target: f64, from: u64, cap: u64 },

    #[error("step schedule has a finite total sum; no rate of divergence exists")]
    ScheduleNotDivergent,

    #[error("index bound {0} does not fit in an index")]
    IndexOverflow(f64),

    #[error("provenance node `{rule}` cannot be rebuilt: {reason}")]
    Unrebuildable { rule: String, reason: String },
}

/// Confidence parameter `λ`, constrained to the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Confidence(f64);

impl Confidence {
    pub fn new(lambda: f64) -> Result<Self, ModuliError> {
        if lambda.is_finite() && 0.0 < lambda && lambda < 1.0 {
            Ok(Self(lambda))
        } else {
            Err(ModuliError::InvalidConfidence(lambda))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Confidence {
    type Error = ModuliError;
    fn try_from(v: f64) -> Result<Self, ModuliError> {
        Self::new(v)
    }
}

impl From<Confidence> for f64 {
    fn from(c: Confidence) -> f64 {
        c.0
    }
}

/// Accuracy parameter `ε`, constrained to the open interval `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Accuracy(f64);

impl Accuracy {
    pub fn new(eps: f64) -> Result<Self, ModuliError> {
        if eps.is_finite() && 0.0 < eps && eps < 1.0 {
            Ok(Self(eps))
        } else {
            Err(ModuliError::InvalidAccuracy(eps))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Accuracy {
    type Error = ModuliError;
    fn try_from(v: f64) -> Result<Self, ModuliError> {
        Self::new(v)
    }
}

impl From<Accuracy> for f64 {
    fn from(a: Accuracy) -> f64 {
        a.0
    }
}

/// The λ (and ε) grid on which monotonicity and floor conditions of moduli
/// are spot-checked, in decreasing order.
pub const CHECK_GRID: [f64; 5] = [0.5, 0.25, 0.1, 0.05, 0.01];

/// Absolute slack allowed when grid-checking monotonicity, to forgive
/// harmless floating-point wobble in custom moduli.
pub(crate) const GRID_SLACK: f64 = 1e-9;

pub(crate) fn ceil_to_index(v: f64) -> Result<u64, ModuliError> {
    if !v.is_finite() {
        return Err(ModuliError::IndexOverflow(v));
    }
    let c = v.ceil();
    if c < 0.0 {
        Ok(0)
    } else if c >= u64::MAX as f64 {
        Err(ModuliError::IndexOverflow(v))
    } else {
        Ok(c as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confidence_rejects_out_of_range() {
        assert!(Confidence::new(0.0).is_err());
        assert!(Confidence::new(1.0).is_err());
        assert!(Confidence::new(-0.2).is_err());
        assert!(Confidence::new(f64::NAN).is_err());
        assert_eq!(Confidence::new(0.25).unwrap().value(), 0.25);
    }

    #[test]
    fn accuracy_rejects_out_of_range() {
        assert!(Accuracy::new(0.0).is_err());
        assert!(Accuracy::new(1.0).is_err());
        assert_eq!(Accuracy::new(0.5).unwrap().value(), 0.5);
    }

    #[test]
    fn ceil_to_index_handles_edges() {
        assert_eq!(ceil_to_index(0.0).unwrap(), 0);
        assert_eq!(ceil_to_index(2.1).unwrap(), 3);
        assert_eq!(ceil_to_index(-5.0).unwrap(), 0);
        assert!(ceil_to_index(f64::INFINITY).is_err());
        assert!(ceil_to_index(1e300).is_err());
    }
}

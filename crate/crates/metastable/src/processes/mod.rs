//! Seeded generators for process families satisfying the recursion
//! hypotheses, each shipping certified moduli metadata.
//!
//! A [`ProcessFamily`] couples a pure sampler `(seed, horizon) -> PathTrace`
//! with a [`Certificate`] asserting which hypotheses the family satisfies
//! (the constants and moduli the bound calculus consumes) and with
//! [`HypothesisFlags`] naming the theorems that apply. Samplers are pure
//! functions: the same seed with a longer horizon extends the shorter trace
//! prefix-exactly, and sampling across seeds needs no coordination.

mod families;
mod rng;

pub use families::{
    deterministic_rs, general_rs, multiplicative_supermartingale, sgd_quadratic,
    sgd_quadratic_with_noise, NoiseKind, ResidualKind,
};
pub use rng::SplitMix64;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moduli::{
    BoundednessModulus, DriftModulus, ModuliError, RateOfDivergence,
    DEFAULT_DIVERGENCE_SCAN_CAP,
};

/// Errors from constructing process families.
#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("factor values must be nonnegative, got {0}")]
    NegativeFactor(f64),

    #[error("factor probabilities must be nonnegative and sum to 1, got total {0}")]
    BadFactorProbabilities(f64),

    #[error("factor distribution must have mean <= 1, got {0}")]
    MeanAboveOne(f64),

    #[error("initial value must be nonnegative and finite, got {0}")]
    BadInitialValue(f64),

    #[error("noise standard deviation must be nonnegative and finite, got {0}")]
    BadNoise(f64),

    #[error("step sizes must lie in [0, 1]; schedule reaches {0}")]
    StepAboveOne(f64),

    #[error("schedule entries must be nonnegative and finite, got {0}")]
    NegativeSchedule(f64),

    #[error("schedule `{0}` has a divergent sum; the construction needs a summable one")]
    DivergentSchedule(&'static str),

    #[error(transparent)]
    Moduli(#[from] ModuliError),
}

/// A step-size or coefficient schedule `n ↦ u_n >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `u_n = u`.
    Constant { u: f64 },
    /// `u_n = scale / (n + 1)`.
    Harmonic { scale: f64 },
    /// `u_n = scale · ratio^n` with `0 < ratio < 1`.
    Geometric { scale: f64, ratio: f64 },
    /// `u_n = values[n]` for `n < len`, then `0`.
    Explicit { values: Vec<f64> },
}

impl StepSchedule {
    pub fn value(&self, n: u64) -> f64 {
        match self {
            StepSchedule::Constant { u } => *u,
            StepSchedule::Harmonic { scale } => scale / (n as f64 + 1.0),
            StepSchedule::Geometric { scale, ratio } => scale * ratio.powi(n as i32),
            StepSchedule::Explicit { values } => {
                values.get(n as usize).copied().unwrap_or(0.0)
            }
        }
    }

    pub(crate) fn validate_nonnegative(&self) -> Result<(), ProcessError> {
        let check = |v: f64| {
            if !v.is_finite() || v < 0.0 {
                Err(ProcessError::NegativeSchedule(v))
            } else {
                Ok(())
            }
        };
        match self {
            StepSchedule::Constant { u } => check(*u),
            StepSchedule::Harmonic { scale } => check(*scale),
            StepSchedule::Geometric { scale, ratio } => {
                check(*scale)?;
                if !(0.0..1.0).contains(ratio) {
                    return Err(ProcessError::NegativeSchedule(*ratio));
                }
                Ok(())
            }
            StepSchedule::Explicit { values } => values.iter().copied().try_for_each(check),
        }
    }

    /// Largest value the schedule ever takes (all kinds peak at `n = 0`
    /// except explicit lists).
    pub(crate) fn sup_value(&self) -> f64 {
        match self {
            StepSchedule::Constant { u } => *u,
            StepSchedule::Harmonic { scale } => *scale,
            StepSchedule::Geometric { scale, .. } => *scale,
            StepSchedule::Explicit { values } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// `sum_n u_n` when finite.
    pub fn total_sum(&self) -> Option<f64> {
        match self {
            StepSchedule::Constant { u } => (*u == 0.0).then_some(0.0),
            StepSchedule::Harmonic { scale } => (*scale == 0.0).then_some(0.0),
            StepSchedule::Geometric { scale, ratio } => Some(scale / (1.0 - ratio)),
            StepSchedule::Explicit { values } => Some(values.iter().sum()),
        }
    }

    /// `sum_n u_n²` when finite.
    pub fn sum_of_squares(&self) -> Option<f64> {
        match self {
            StepSchedule::Constant { u } => (*u == 0.0).then_some(0.0),
            StepSchedule::Harmonic { scale } => {
                Some(scale * scale * std::f64::consts::PI.powi(2) / 6.0)
            }
            StepSchedule::Geometric { scale, ratio } => {
                Some(scale * scale / (1.0 - ratio * ratio))
            }
            StepSchedule::Explicit { values } => Some(values.iter().map(|v| v * v).sum()),
        }
    }

    /// `prod_n (1 + u_n)` when finite, evaluated to machine convergence.
    pub fn product_one_plus(&self) -> Option<f64> {
        self.total_sum()?;
        match self {
            StepSchedule::Constant { .. } | StepSchedule::Harmonic { .. } => Some(1.0),
            StepSchedule::Geometric { scale, ratio } => {
                let mut product = 1.0f64;
                let mut term = *scale;
                while term > 1e-18 {
                    product *= 1.0 + term;
                    term *= ratio;
                }
                Some(product)
            }
            StepSchedule::Explicit { values } => {
                Some(values.iter().fold(1.0, |acc, v| acc * (1.0 + v)))
            }
        }
    }

    /// A rate of divergence for the partial sums, when they diverge:
    /// closed-form for constant steps, partial-sum scanning otherwise.
    pub fn divergence_rate(&self) -> Result<RateOfDivergence, ModuliError> {
        match self {
            StepSchedule::Constant { u } => RateOfDivergence::constant_step(*u),
            StepSchedule::Harmonic { scale } => {
                if *scale <= 0.0 {
                    return Err(ModuliError::ScheduleNotDivergent);
                }
                let scale = *scale;
                Ok(RateOfDivergence::scanning(
                    &format!("harmonic(scale={scale})"),
                    move |n| scale / (n as f64 + 1.0),
                    DEFAULT_DIVERGENCE_SCAN_CAP,
                ))
            }
            StepSchedule::Geometric { .. } | StepSchedule::Explicit { .. } => {
                Err(ModuliError::ScheduleNotDivergent)
            }
        }
    }
}

/// One finite sample path: the main track `x` plus the optional recursion
/// tracks, all indexed `0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub x: Vec<f64>,
    pub a: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub seed: u64,
    pub horizon: u64,
}

impl PathTrace {
    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Checks the trace invariants: every entry nonnegative and finite,
    /// all present tracks of identical length `horizon + 1`.
    pub fn validate(&self) -> Result<(), String> {
        let expect = self.horizon as usize + 1;
        if self.x.len() != expect {
            return Err(format!("x has {} entries, expected {expect}", self.x.len()));
        }
        for (name, track) in [("a", &self.a), ("b", &self.b), ("c", &self.c), ("v", &self.v)] {
            if let Some(t) = track {
                if t.len() != expect {
                    return Err(format!("track {name} has {} entries, expected {expect}", t.len()));
                }
            }
        }
        let all = std::iter::once(&self.x)
            .chain(self.a.iter())
            .chain(self.b.iter())
            .chain(self.c.iter())
            .chain(self.v.iter());
        for track in all {
            for &v in track {
                if !v.is_finite() || v < 0.0 {
                    return Err(format!("entry {v} is negative or non-finite"));
                }
            }
        }
        Ok(())
    }

    /// CSV export with columns `n, x[, a][, b][, c][, v]`; absent tracks are
    /// omitted.
    pub fn to_csv(&self) -> String {
        let mut header = String::from("n,x");
        for (name, track) in [("a", &self.a), ("b", &self.b), ("c", &self.c), ("v", &self.v)] {
            if track.is_some() {
                header.push(',');
                header.push_str(name);
            }
        }
        let mut out = header;
        out.push('\n');
        for n in 0..self.x.len() {
            out.push_str(&format!("{n},{}", self.x[n]));
            for track in [&self.a, &self.b, &self.c, &self.v].into_iter().flatten() {
                out.push_str(&format!(",{}", track[n]));
            }
            out.push('\n');
        }
        out
    }
}

/// Certified metadata asserting which hypotheses a family satisfies.
#[derive(Debug, Clone)]
pub struct Certificate {
    /// Strict upper bound on `E[X_0]`, exceeding 1.
    pub k: f64,
    /// Exact mean of the initial value (used by crossing bounds).
    pub initial_mean: f64,
    /// Modulus of uniform boundedness for `prod (1 + A_i)`.
    pub rho: Option<BoundednessModulus>,
    /// Modulus of uniform boundedness for `sum C_i`.
    pub sigma: Option<BoundednessModulus>,
    /// Step-size schedule of the recursion, when it has one.
    pub steps: Option<StepSchedule>,
    /// Rate of divergence for the step-size partial sums.
    pub divergence: Option<RateOfDivergence>,
    /// Drift modulus relating the V-track to the X-track.
    pub drift: Option<DriftModulus>,
}

impl Certificate {
    /// Serializable summary: constants plus the provenance of each present
    /// modulus.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "initial_mean": self.initial_mean,
            "rho": self.rho.as_ref().map(|m| m.provenance()),
            "sigma": self.sigma.as_ref().map(|m| m.provenance()),
            "steps": self.steps,
            "divergence": self.divergence.as_ref().map(|r| r.provenance()),
            "drift": self.drift.as_ref().map(|d| d.provenance()),
        })
    }
}

/// Which theorem hypotheses the family certifies.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct HypothesisFlags {
    pub is_supermartingale: bool,
    pub is_rs: bool,
    pub is_rm: bool,
    pub is_deterministic: bool,
}

/// A seeded causal sampler plus its certificate and hypothesis flags.
#[derive(Debug, Clone)]
pub struct ProcessFamily {
    pub(crate) kind: families::FamilyKind,
    pub certificate: Certificate,
    pub flags: HypothesisFlags,
}

impl ProcessFamily {
    /// Samples one path. Pure in `(seed, horizon)`: the same seed with a
    /// longer horizon extends the shorter trace prefix-exactly.
    pub fn sample(&self, seed: u64, horizon: u64) -> PathTrace {
        let trace = self.kind.sample(seed, horizon);
        debug_assert_eq!(trace.validate(), Ok(()));
        trace
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// JSON descriptor: kind, parameters, certificate summary, flags.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.kind,
            "certificate": self.certificate.summary(),
            "flags": self.flags,
        })
    }

    /// Indices at which the deterministic recursion clamped `β` to keep the
    /// iterate nonnegative. Empty for stochastic families.
    pub fn clamp_events(&self, horizon: u64) -> Vec<u64> {
        self.kind.clamp_events(horizon)
    }
}

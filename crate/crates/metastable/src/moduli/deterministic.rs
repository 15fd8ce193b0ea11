//! Learnable rates for plain real sequences.
//!
//! A function `φ: (0,1) -> R` is a learnable rate of convergence for a real
//! sequence `(x_n)` when every increasing interval scheme has some window of
//! index `n <= φ(ε)` on which the sequence varies by less than `ε` —
//! equivalently, the sequence experiences at most `φ(ε)` disjoint
//! ε-fluctuations.

use std::fmt;
use std::sync::Arc;

use super::provenance::Provenance;
use super::{ModuliError, CHECK_GRID, GRID_SLACK};

pub(crate) const KIND_DET_RATE: &str = "learnable rate of convergence";

#[derive(Clone)]
enum DNode {
    Constant { value: f64 },
    /// `ε ↦ K/ε`: a nondecreasing sequence bounded by `K` gains at least
    /// `ε` on each fluctuation, so it has at most `K/ε` of them.
    Monotone { k: f64 },
    /// `ε ↦ 8L(K+M)/ε` for the nonstochastic almost-supermartingale
    /// recursion `x_{n+1} <= (1+α_n)x_n - β_n + γ_n`.
    NonstochasticRs { k: f64, l: f64, m: f64 },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

/// An evaluable `φ(ε)` bound for a deterministic sequence.
#[derive(Clone)]
pub struct DeterministicRate {
    node: Arc<DNode>,
}

impl fmt::Debug for DeterministicRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeterministicRate")
            .field("rule", &self.provenance().rule)
            .finish()
    }
}

impl DeterministicRate {
    pub fn constant(value: f64) -> Result<Self, ModuliError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ModuliError::NonPositive {
                what: "constant rate",
                value,
            });
        }
        Ok(Self {
            node: Arc::new(DNode::Constant { value }),
        })
    }

    pub fn custom(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            node: Arc::new(DNode::Custom {
                name: name.to_owned(),
                f: Arc::new(f),
            }),
        }
    }

    /// `eps` only needs to be positive here; fluctuation bounds make sense
    /// for any scale.
    pub fn eval(&self, eps: f64) -> f64 {
        match &*self.node {
            DNode::Constant { value } => *value,
            DNode::Monotone { k } => k / eps,
            DNode::NonstochasticRs { k, l, m } => 8.0 * l * (k + m) / eps,
            DNode::Custom { f, .. } => f(eps),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match &*self.node {
            DNode::Constant { value } => {
                Provenance::new("constant_deterministic_rate", KIND_DET_RATE)
                    .with_param("value", *value)
            }
            DNode::Monotone { k } => {
                Provenance::new("monotone_learnable", KIND_DET_RATE).with_param("k", *k)
            }
            DNode::NonstochasticRs { k, l, m } => {
                Provenance::new("nonstochastic_rs_rate", KIND_DET_RATE)
                    .with_param("k", *k)
                    .with_param("l", *l)
                    .with_param("m", *m)
            }
            DNode::Custom { name, .. } => {
                Provenance::new("custom_deterministic_rate", KIND_DET_RATE)
                    .with_note(&format!("opaque function `{name}`"))
            }
        }
    }

    /// Spot-checks on [`CHECK_GRID`] that the rate is nonincreasing in ε.
    pub fn check_nonincreasing(&self) -> Result<(), ModuliError> {
        let mut prev = f64::INFINITY;
        for &eps in &CHECK_GRID {
            let v = self.eval(eps);
            if !v.is_finite() {
                return Err(ModuliError::MalformedModulus(format!(
                    "deterministic rate not finite at eps={eps}"
                )));
            }
            if v > prev + GRID_SLACK * prev.abs().max(1.0) {
                return Err(ModuliError::MalformedModulus(format!(
                    "deterministic rate increases in eps near eps={eps}"
                )));
            }
            prev = prev.min(v);
        }
        Ok(())
    }
}

/// Learnable rate `ε ↦ K/ε` for a nondecreasing nonnegative sequence
/// bounded by `K` (and, via the tails, for partial sums of a nonnegative
/// series summing below `K`).
pub fn monotone_learnable(k: f64) -> Result<DeterministicRate, ModuliError> {
    if !k.is_finite() || k <= 0.0 {
        return Err(ModuliError::NonPositive { what: "K", value: k });
    }
    Ok(DeterministicRate {
        node: Arc::new(DNode::Monotone { k }),
    })
}

/// Quantitative form of the nonstochastic recursion
/// `x_{n+1} <= (1+α_n)x_n - β_n + γ_n` with `x_0 < K`,
/// `prod (1+α_i) < L`, `sum γ_i < M`: the sequence converges with learnable
/// rate `ε ↦ 8L(K+M)/ε` and `sum β_i < L(K+M)`.
pub fn nonstochastic_rs(
    k: f64,
    l: f64,
    m: f64,
) -> Result<(DeterministicRate, f64), ModuliError> {
    for (what, value) in [("K", k), ("L", l), ("M", m)] {
        if !value.is_finite() || value <= 0.0 {
            return Err(ModuliError::NonPositive { what, value });
        }
    }
    let rate = DeterministicRate {
        node: Arc::new(DNode::NonstochasticRs { k, l, m }),
    };
    Ok((rate, l * (k + m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::count_fluctuations;

    #[test]
    fn monotone_rate_matches_formula() {
        let r = monotone_learnable(10.0).unwrap();
        assert_eq!(r.eval(0.5), 20.0);
        let r1 = monotone_learnable(1.0).unwrap();
        assert!((r1.eval(1.0 - 1e-12) - 1.0).abs() < 1e-9);
        assert!(monotone_learnable(0.0).is_err());
        assert!(monotone_learnable(-2.0).is_err());
    }

    #[test]
    fn monotone_rate_bounds_fluctuations_of_geometric_approach() {
        // x_n = 1 - 2^{-n} is nondecreasing with K = 1; its fluctuation
        // count at ε is at most 1/ε.
        let xs: Vec<f64> = (0..40).map(|n| 1.0 - 2f64.powi(-n)).collect();
        let rate = monotone_learnable(1.0).unwrap();
        for (eps, expected) in [(0.5, 1usize), (0.25, 2usize)] {
            let j = count_fluctuations(&xs, eps);
            assert_eq!(j, expected);
            assert!((j as f64) <= rate.eval(eps));
        }
    }

    #[test]
    fn nonstochastic_rate_matches_formula() {
        let (rate, bsum) = nonstochastic_rs(1.0, 2.0, 1.0).unwrap();
        assert_eq!(rate.eval(0.1), 320.0);
        assert_eq!(bsum, 4.0);
        assert!(nonstochastic_rs(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn constant_sequence_has_no_fluctuations() {
        let xs = vec![0.7; 100];
        let (rate, _) = nonstochastic_rs(1.0, 1.0, 1.0).unwrap();
        for eps in [0.5, 0.1, 0.01] {
            assert_eq!(count_fluctuations(&xs, eps), 0);
            assert!(0.0 <= rate.eval(eps));
        }
    }

    #[test]
    fn tight_recurrence_respects_both_bounds() {
        // x_0 = 0.5, α_n = γ_n = 2^{-n-2}, β_n = α_n x_n + γ_n keeps the
        // recurrence an equality with x ≡ x_0.
        let horizon = 10_000usize;
        let mut x = 0.5f64;
        let mut beta_sum = 0.0f64;
        let mut xs = Vec::with_capacity(horizon + 1);
        xs.push(x);
        for n in 0..horizon {
            let a = 2f64.powi(-(n as i32) - 2);
            let g = a;
            let beta = a * x + g;
            beta_sum += beta;
            x = (1.0 + a) * x - beta + g;
            xs.push(x);
        }
        assert!((x - 0.5).abs() < 1e-12);
        let (rate, bsum_bound) = nonstochastic_rs(1.0, 2.0, 1.0).unwrap();
        assert!(beta_sum < bsum_bound, "{beta_sum} >= {bsum_bound}");
        let j = count_fluctuations(&xs, 0.1);
        assert!((j as f64) <= rate.eval(0.1));
        assert_eq!(rate.eval(0.1), 320.0);
    }

    #[test]
    fn grid_check_flags_increasing_rate() {
        assert!(DeterministicRate::custom("inc", |e| e).check_nonincreasing().is_err());
        assert!(monotone_learnable(3.0).unwrap().check_nonincreasing().is_ok());
    }
}

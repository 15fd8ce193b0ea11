//! Moduli of uniform boundedness.
//!
//! A modulus of uniform boundedness for a process `(X_n)` is a function
//! `ρ: (0,1) -> R` with `P(sup_n |X_n| >= ρ(λ)) < λ`. For a series of
//! nonnegative terms the same notion, applied to the partial sums, is the
//! preferred quantitative form of almost-sure convergence of the series.

use std::fmt;
use std::sync::Arc;

use super::provenance::{child, param, Provenance};
use super::rate::LearnableRate;
use super::{Accuracy, Confidence, ModuliError, CHECK_GRID, GRID_SLACK};

pub(crate) const KIND_BOUNDEDNESS: &str = "modulus of uniform boundedness";

#[derive(Clone)]
pub(crate) enum BNode {
    Constant {
        value: f64,
    },
    /// `λ ↦ K/λ`: for a nonnegative supermartingale with `E[U_0] < K`, by
    /// Ville's maximal inequality `P(sup U_n >= K/λ) <= E[U_0] λ / K < λ`.
    Ville {
        k: f64,
    },
    /// `λ ↦ a(λ/2) + b(λ/2)`, a modulus for the pointwise sum.
    Sum {
        a: BoundednessModulus,
        b: BoundednessModulus,
    },
    /// `λ ↦ a(λ/2) · b(λ/2)`, a modulus for the pointwise product.
    Product {
        a: BoundednessModulus,
        b: BoundednessModulus,
    },
    /// `λ ↦ a·φ(λ, ε) + ε` where `φ` is a direct rate of convergence for a
    /// series with terms in `[0, a]`.
    FromDirectRate {
        phi: LearnableRate,
        per_term_bound: f64,
        eps: f64,
    },
    /// `λ ↦ 2(K + σ(λ/2))/λ`: uniform boundedness of the compensated
    /// supermartingale transform of an almost-supermartingale, obtained by
    /// stopping and Ville's inequality.
    RsU {
        k: f64,
        sigma: BoundednessModulus,
    },
    /// `λ ↦ 5(K + σ(λ/4))/λ`, dominating `χ₁(λ/2) + σ(λ/2)`: uniform
    /// boundedness of the compensated partial sums of the B-terms.
    RsBsumTilde {
        k: f64,
        sigma: BoundednessModulus,
    },
    /// `λ ↦ 9(K + σ(λ/8))·ρ(λ/2)/λ`, dominating `χ₂(λ/2)·ρ(λ/2)`: uniform
    /// boundedness of the X-process itself.
    RsX {
        k: f64,
        rho: BoundednessModulus,
        sigma: BoundednessModulus,
    },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    Labeled {
        label: String,
        inner: BoundednessModulus,
    },
}

/// An evaluable `ρ(λ)` bound with provenance.
#[derive(Clone)]
pub struct BoundednessModulus {
    node: Arc<BNode>,
    floor_one: bool,
}

impl fmt::Debug for BoundednessModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundednessModulus")
            .field("rule", &self.provenance().rule)
            .field("floor_one", &self.floor_one)
            .finish()
    }
}

impl BoundednessModulus {
    fn from_node(node: BNode, floor_one: bool) -> Self {
        Self {
            node: Arc::new(node),
            floor_one,
        }
    }

    /// Constant modulus. Nonnegative; the `>= 1` floor is certified exactly
    /// when the value is at least one.
    pub fn constant(value: f64) -> Result<Self, ModuliError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ModuliError::NonPositive {
                what: "constant boundedness modulus",
                value,
            });
        }
        Ok(Self::from_node(BNode::Constant { value }, value >= 1.0))
    }

    /// The Ville modulus `λ ↦ K/λ` for a nonnegative supermartingale with
    /// `E[U_0] < K`.
    pub fn ville(k: f64) -> Result<Self, ModuliError> {
        if !k.is_finite() || k <= 0.0 {
            return Err(ModuliError::NonPositive { what: "K", value: k });
        }
        Ok(Self::from_node(BNode::Ville { k }, k >= 1.0))
    }

    /// Wraps an arbitrary nonincreasing bound function. `floor_one` asserts
    /// that the function is everywhere `>= 1`; it is spot-checked whenever
    /// the modulus enters a construction that requires it.
    pub fn custom(
        name: &str,
        floor_one: bool,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_node(
            BNode::Custom {
                name: name.to_owned(),
                f: Arc::new(f),
            },
            floor_one,
        )
    }

    pub(crate) fn labeled(self, label: &str) -> Self {
        let floor = self.floor_one;
        Self::from_node(
            BNode::Labeled {
                label: label.to_owned(),
                inner: self,
            },
            floor,
        )
    }

    /// True when the modulus is certified to take values in `[1, ∞)`.
    pub fn floor_one(&self) -> bool {
        self.floor_one
    }

    pub fn eval(&self, lambda: Confidence) -> f64 {
        self.eval_raw(lambda.value())
    }

    pub(crate) fn eval_raw(&self, lambda: f64) -> f64 {
        match &*self.node {
            BNode::Constant { value } => *value,
            BNode::Ville { k } => k / lambda,
            BNode::Sum { a, b } => a.eval_raw(lambda / 2.0) + b.eval_raw(lambda / 2.0),
            BNode::Product { a, b } => a.eval_raw(lambda / 2.0) * b.eval_raw(lambda / 2.0),
            BNode::FromDirectRate {
                phi,
                per_term_bound,
                eps,
            } => per_term_bound * phi.eval_raw(lambda, *eps) + eps,
            BNode::RsU { k, sigma } => 2.0 * (k + sigma.eval_raw(lambda / 2.0)) / lambda,
            BNode::RsBsumTilde { k, sigma } => {
                5.0 * (k + sigma.eval_raw(lambda / 4.0)) / lambda
            }
            BNode::RsX { k, rho, sigma } => {
                9.0 * (k + sigma.eval_raw(lambda / 8.0)) * rho.eval_raw(lambda / 2.0) / lambda
            }
            BNode::Custom { f, .. } => f(lambda),
            BNode::Labeled { inner, .. } => inner.eval_raw(lambda),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match &*self.node {
            BNode::Constant { value } => Provenance::new("constant_boundedness", KIND_BOUNDEDNESS)
                .with_param("value", *value),
            BNode::Ville { k } => {
                Provenance::new("ville", KIND_BOUNDEDNESS).with_param("k", *k)
            }
            BNode::Sum { a, b } => Provenance::new("sum_boundedness", KIND_BOUNDEDNESS)
                .with_child(a.provenance())
                .with_child(b.provenance()),
            BNode::Product { a, b } => Provenance::new("product_boundedness", KIND_BOUNDEDNESS)
                .with_child(a.provenance())
                .with_child(b.provenance()),
            BNode::FromDirectRate {
                phi,
                per_term_bound,
                eps,
            } => Provenance::new("boundedness_from_direct_rate", KIND_BOUNDEDNESS)
                .with_param("per_term_bound", *per_term_bound)
                .with_param("eps", *eps)
                .with_child(phi.provenance()),
            BNode::RsU { k, sigma } => Provenance::new("rs_u_boundedness", KIND_BOUNDEDNESS)
                .with_param("k", *k)
                .with_child(sigma.provenance()),
            BNode::RsBsumTilde { k, sigma } => {
                Provenance::new("rs_bsum_tilde_boundedness", KIND_BOUNDEDNESS)
                    .with_param("k", *k)
                    .with_child(sigma.provenance())
            }
            BNode::RsX { k, rho, sigma } => Provenance::new("rs_x_boundedness", KIND_BOUNDEDNESS)
                .with_param("k", *k)
                .with_child(rho.provenance())
                .with_child(sigma.provenance()),
            BNode::Custom { name, .. } => Provenance::new("custom_boundedness", KIND_BOUNDEDNESS)
                .with_note(&format!("opaque function `{name}`")),
            BNode::Labeled { label, inner } => inner.provenance().with_label(label),
        }
    }

    pub(crate) fn rebuild(p: &Provenance) -> Result<Self, ModuliError> {
        let rebuilt = match p.rule.as_str() {
            "constant_boundedness" => Self::constant(param(p, "value")?)?,
            "ville" => Self::ville(param(p, "k")?)?,
            "sum_boundedness" => sum_boundedness(
                &Self::rebuild(child(p, 0)?)?,
                &Self::rebuild(child(p, 1)?)?,
            ),
            "product_boundedness" => product_boundedness(
                &Self::rebuild(child(p, 0)?)?,
                &Self::rebuild(child(p, 1)?)?,
            ),
            "boundedness_from_direct_rate" => boundedness_from_direct_rate(
                &LearnableRate::rebuild(child(p, 0)?)?,
                param(p, "per_term_bound")?,
                Accuracy::new(param(p, "eps")?)?,
            )?,
            "rs_u_boundedness" => Self::from_node(
                BNode::RsU {
                    k: param(p, "k")?,
                    sigma: Self::rebuild(child(p, 0)?)?,
                },
                true,
            ),
            "rs_bsum_tilde_boundedness" => Self::from_node(
                BNode::RsBsumTilde {
                    k: param(p, "k")?,
                    sigma: Self::rebuild(child(p, 0)?)?,
                },
                true,
            ),
            "rs_x_boundedness" => Self::from_node(
                BNode::RsX {
                    k: param(p, "k")?,
                    rho: Self::rebuild(child(p, 0)?)?,
                    sigma: Self::rebuild(child(p, 1)?)?,
                },
                true,
            ),
            other => {
                return Err(ModuliError::Unrebuildable {
                    rule: other.to_owned(),
                    reason: "not a boundedness rule or an opaque custom function".to_owned(),
                })
            }
        };
        Ok(match &p.label {
            Some(label) => rebuilt.labeled(label),
            None => rebuilt,
        })
    }

    pub(crate) fn rs_u_node(k: f64, sigma: &BoundednessModulus) -> Self {
        Self::from_node(
            BNode::RsU {
                k,
                sigma: sigma.clone(),
            },
            true,
        )
    }

    pub(crate) fn rs_bsum_tilde_node(k: f64, sigma: &BoundednessModulus) -> Self {
        Self::from_node(
            BNode::RsBsumTilde {
                k,
                sigma: sigma.clone(),
            },
            true,
        )
    }

    pub(crate) fn rs_x_node(k: f64, rho: &BoundednessModulus, sigma: &BoundednessModulus) -> Self {
        Self::from_node(
            BNode::RsX {
                k,
                rho: rho.clone(),
                sigma: sigma.clone(),
            },
            true,
        )
    }

    /// Spot-checks on [`CHECK_GRID`] that the modulus is nonincreasing in λ.
    pub fn check_nonincreasing(&self) -> Result<(), ModuliError> {
        // CHECK_GRID is in decreasing λ order, so values must be nondecreasing.
        let mut prev = f64::INFINITY;
        for &lambda in &CHECK_GRID {
            let v = self.eval_raw(lambda);
            if !v.is_finite() {
                return Err(ModuliError::MalformedModulus(format!(
                    "boundedness modulus not finite at lambda={lambda}"
                )));
            }
            if v > prev + GRID_SLACK * prev.abs().max(1.0) {
                return Err(ModuliError::MalformedModulus(format!(
                    "boundedness modulus increases in lambda near lambda={lambda}"
                )));
            }
            prev = prev.min(v);
        }
        Ok(())
    }

    /// Validates the hypotheses the almost-supermartingale constructions
    /// place on `ρ` and `σ`: nonincreasing with values in `[1, ∞)`,
    /// spot-checked on [`CHECK_GRID`].
    pub fn check_rs_shape(&self) -> Result<(), ModuliError> {
        self.check_nonincreasing()?;
        for &lambda in &CHECK_GRID {
            if self.eval_raw(lambda) < 1.0 - GRID_SLACK {
                return Err(ModuliError::MalformedModulus(format!(
                    "modulus takes value {} < 1 at lambda={lambda}",
                    self.eval_raw(lambda)
                )));
            }
        }
        Ok(())
    }
}

/// Modulus of uniform boundedness for `X_n + Y_n`: `λ ↦ ρ(λ/2) + σ(λ/2)`.
pub fn sum_boundedness(a: &BoundednessModulus, b: &BoundednessModulus) -> BoundednessModulus {
    BoundednessModulus::from_node(
        BNode::Sum {
            a: a.clone(),
            b: b.clone(),
        },
        a.floor_one || b.floor_one,
    )
}

/// Modulus of uniform boundedness for `X_n · Y_n`: `λ ↦ ρ(λ/2) · σ(λ/2)`.
pub fn product_boundedness(a: &BoundednessModulus, b: &BoundednessModulus) -> BoundednessModulus {
    BoundednessModulus::from_node(
        BNode::Product {
            a: a.clone(),
            b: b.clone(),
        },
        a.floor_one && b.floor_one,
    )
}

/// Turns a direct rate of convergence for a series with terms in
/// `[0, per_term_bound]` into a modulus of uniform boundedness for the
/// series: `λ ↦ a·φ(λ, ε) + ε`.
pub fn boundedness_from_direct_rate(
    phi: &LearnableRate,
    per_term_bound: f64,
    eps: Accuracy,
) -> Result<BoundednessModulus, ModuliError> {
    if !per_term_bound.is_finite() || per_term_bound <= 0.0 {
        return Err(ModuliError::NonPositive {
            what: "per-term bound",
            value: per_term_bound,
        });
    }
    Ok(BoundednessModulus::from_node(
        BNode::FromDirectRate {
            phi: phi.clone(),
            per_term_bound,
            eps: eps.value(),
        },
        false,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::rate::LearnableRate;

    fn conf(l: f64) -> Confidence {
        Confidence::new(l).unwrap()
    }

    #[test]
    fn constant_and_ville_evaluate_directly() {
        let c = BoundednessModulus::constant(5.0).unwrap();
        assert_eq!(c.eval(conf(0.1)), 5.0);
        assert!(c.floor_one());
        let v = BoundednessModulus::ville(2.0).unwrap();
        assert_eq!(v.eval(conf(0.25)), 8.0);
    }

    #[test]
    fn constant_rejects_negative() {
        assert!(BoundednessModulus::constant(-1.0).is_err());
        assert!(BoundednessModulus::ville(0.0).is_err());
    }

    #[test]
    fn sum_and_product_follow_halving_rule() {
        // ρ(λ)=1/λ, σ(λ)=2/λ, λ=0.5: sum → 12, product → 32.
        let rho = BoundednessModulus::ville(1.0).unwrap();
        let sigma = BoundednessModulus::ville(2.0).unwrap();
        let s = sum_boundedness(&rho, &sigma);
        let p = product_boundedness(&rho, &sigma);
        assert_eq!(s.eval(conf(0.5)), 12.0);
        assert_eq!(p.eval(conf(0.5)), 32.0);
    }

    #[test]
    fn product_of_unit_constants_is_one() {
        let one = BoundednessModulus::constant(1.0).unwrap();
        let p = product_boundedness(&one, &one);
        for &l in &CHECK_GRID {
            assert_eq!(p.eval(conf(l)), 1.0);
        }
    }

    #[test]
    fn product_symmetric_in_arguments() {
        let rho = BoundednessModulus::ville(1.5).unwrap();
        let sigma = BoundednessModulus::constant(3.0).unwrap();
        for &l in &CHECK_GRID {
            assert_eq!(
                product_boundedness(&rho, &sigma).eval(conf(l)),
                product_boundedness(&sigma, &rho).eval(conf(l)),
            );
        }
    }

    #[test]
    fn direct_rate_conversion_matches_formula() {
        // phi ≡ 10, a=1, eps=0.5, λ=0.1 → 10.5; phi ≡ 0 → 0.5.
        let phi10 = LearnableRate::constant(10.0).unwrap();
        let m = boundedness_from_direct_rate(&phi10, 1.0, Accuracy::new(0.5).unwrap()).unwrap();
        assert_eq!(m.eval(conf(0.1)), 10.5);

        let phi0 = LearnableRate::constant(0.0).unwrap();
        let m0 = boundedness_from_direct_rate(&phi0, 1.0, Accuracy::new(0.5).unwrap()).unwrap();
        assert_eq!(m0.eval(conf(0.1)), 0.5);

        assert!(boundedness_from_direct_rate(&phi10, 0.0, Accuracy::new(0.5).unwrap()).is_err());
    }

    #[test]
    fn direct_rate_conversion_dominates_geometric_series() {
        // Terms A_n = 2^{-n-1} with a = 1/2: the tail from index m is
        // 2^{-m}, so phi(λ,ε) = ceil(log2(1/ε)) is a direct rate. At
        // ε = 0.25 the modulus is 0.5·2 + 0.25 = 1.25 >= the true sum 1.
        let phi = LearnableRate::custom("log2_tail", |_l, e| (1.0 / e).log2().ceil());
        let m = boundedness_from_direct_rate(&phi, 0.5, Accuracy::new(0.25).unwrap()).unwrap();
        let true_sum: f64 = (0..60).map(|n| 2f64.powi(-n - 1)).sum();
        assert_eq!(m.eval(conf(0.1)), 1.25);
        assert!(m.eval(conf(0.1)) >= true_sum);
    }

    #[test]
    fn grid_check_rejects_increasing_modulus() {
        let bad = BoundednessModulus::custom("increasing", false, |l| l);
        assert!(bad.check_nonincreasing().is_err());
        let below_floor = BoundednessModulus::constant(0.5).unwrap();
        assert!(below_floor.check_rs_shape().is_err());
        assert!(BoundednessModulus::ville(2.0).unwrap().check_rs_shape().is_ok());
    }

    #[test]
    fn provenance_round_trips_bit_for_bit() {
        let rho = BoundednessModulus::ville(1.0).unwrap();
        let sigma = BoundednessModulus::constant(2.0).unwrap();
        let m = product_boundedness(&sum_boundedness(&rho, &sigma), &rho).labeled("outer");
        let json = m.provenance().to_json();
        let tree: Provenance = serde_json::from_str(&json).unwrap();
        let rebuilt = BoundednessModulus::rebuild(&tree).unwrap();
        for &l in &CHECK_GRID {
            let got = rebuilt.eval(conf(l));
            let want = m.eval(conf(l));
            assert_eq!(got.to_bits(), want.to_bits());
        }
        assert!(tree.contains_label("outer"));
    }

    #[test]
    fn custom_nodes_do_not_rebuild() {
        let m = BoundednessModulus::custom("opaque", false, |l| 1.0 / l);
        assert!(BoundednessModulus::rebuild(&m.provenance()).is_err());
    }
}

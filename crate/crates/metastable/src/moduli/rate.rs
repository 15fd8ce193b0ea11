//! Learnable rates of uniform convergence.
//!
//! `φ(λ, ε)` is a learnable rate of uniform convergence for a process
//! `(X_n)` when for every increasing interval scheme
//! `a_0 < b_0 <= a_1 < b_1 <= ...` there is some window index
//! `n <= φ(λ, ε)` whose oscillation event has probability below `λ`:
//!
//! ```text
//! P(∃ i, j ∈ [a_n; b_n] : |X_i - X_j| >= ε) < λ
//! ```
//!
//! Equivalently, at most `φ(λ, ε)` windows of any scheme can carry
//! oscillation probability `>= λ`. Iterating a counterfunction `⌈φ⌉` times
//! turns a learnable rate into a metastable search bound, see
//! [`metastable_from_learnable`](super::metastable_from_learnable).

use std::fmt;
use std::sync::Arc;

use super::boundedness::BoundednessModulus;
use super::provenance::{child, param, Provenance};
use super::{Accuracy, Confidence, ModuliError, CHECK_GRID, GRID_SLACK};

pub(crate) const KIND_RATE: &str = "learnable rate of uniform convergence";

#[derive(Clone)]
pub(crate) enum RNode {
    Constant {
        value: f64,
    },
    /// `(λ, ε) ↦ 2ρ(λ/2)/(λε)`: the rate of a pointwise nondecreasing
    /// process with boundedness modulus `ρ`, and of the partial sums of a
    /// nonnegative series whose total has modulus `ρ`.
    FromBoundedness {
        rho: BoundednessModulus,
    },
    /// `(λ, ε) ↦ c (K/(λε))²` with the universal constant `c = 200`, valid
    /// for any nonnegative supermartingale with `E[U_0] < K`.
    Supermartingale {
        k: f64,
    },
    /// `(λ, ε) ↦ φ(λ/2, ε/2) + ψ(λ/2, ε/2)`, a rate for `X_n + Y_n`.
    Sum {
        phi: LearnableRate,
        psi: LearnableRate,
    },
    /// `(λ, ε) ↦ φ(λ/4, ε/(2σ(λ/4))) + ψ(λ/4, ε/(2ρ(λ/4)))`, a rate for
    /// `X_n · Y_n` where `ρ`/`σ` bound the X/Y process respectively.
    Product {
        phi: LearnableRate,
        psi: LearnableRate,
        rho: BoundednessModulus,
        sigma: BoundednessModulus,
    },
    /// `(λ, ε) ↦ 4c((K + σ(λ/2))/(λε))²`: the rate of the compensated
    /// supermartingale transform of an almost-supermartingale, obtained by
    /// stopping at the first time the compensator exceeds `σ(λ/2)`.
    RsU {
        k: f64,
        sigma: BoundednessModulus,
    },
    /// The closed-form almost-supermartingale rate
    /// `(λ, ε) ↦ c̄ (ρ(λ/8)(K + σ(λ/16))/(λε))²`.
    RsClosed {
        k: f64,
        cbar: f64,
        rho: BoundednessModulus,
        sigma: BoundednessModulus,
    },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    },
    Labeled {
        label: String,
        inner: LearnableRate,
    },
}

/// An evaluable `φ(λ, ε)` bound with provenance.
#[derive(Clone)]
pub struct LearnableRate {
    node: Arc<RNode>,
}

impl fmt::Debug for LearnableRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LearnableRate")
            .field("rule", &self.provenance().rule)
            .finish()
    }
}

impl LearnableRate {
    pub(crate) fn from_node(node: RNode) -> Self {
        Self {
            node: Arc::new(node),
        }
    }

    pub fn constant(value: f64) -> Result<Self, ModuliError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ModuliError::NonPositive {
                what: "constant learnable rate",
                value,
            });
        }
        Ok(Self::from_node(RNode::Constant { value }))
    }

    pub fn custom(name: &str, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_node(RNode::Custom {
            name: name.to_owned(),
            f: Arc::new(f),
        })
    }

    pub(crate) fn labeled(self, label: &str) -> Self {
        Self::from_node(RNode::Labeled {
            label: label.to_owned(),
            inner: self,
        })
    }

    pub fn eval(&self, lambda: Confidence, eps: Accuracy) -> f64 {
        self.eval_raw(lambda.value(), eps.value())
    }

    pub(crate) fn eval_raw(&self, lambda: f64, eps: f64) -> f64 {
        match &*self.node {
            RNode::Constant { value } => *value,
            RNode::FromBoundedness { rho } => {
                2.0 * rho.eval_raw(lambda / 2.0) / (lambda * eps)
            }
            RNode::Supermartingale { k } => {
                let q = k / (lambda * eps);
                super::robbins_siegmund::SUPERMARTINGALE_CONSTANT * q * q
            }
            RNode::Sum { phi, psi } => {
                phi.eval_raw(lambda / 2.0, eps / 2.0) + psi.eval_raw(lambda / 2.0, eps / 2.0)
            }
            RNode::Product {
                phi,
                psi,
                rho,
                sigma,
            } => {
                let quarter = lambda / 4.0;
                phi.eval_raw(quarter, eps / (2.0 * sigma.eval_raw(quarter)))
                    + psi.eval_raw(quarter, eps / (2.0 * rho.eval_raw(quarter)))
            }
            RNode::RsU { k, sigma } => {
                let q = (k + sigma.eval_raw(lambda / 2.0)) / (lambda * eps);
                4.0 * super::robbins_siegmund::SUPERMARTINGALE_CONSTANT * q * q
            }
            RNode::RsClosed {
                k,
                cbar,
                rho,
                sigma,
            } => {
                let q = rho.eval_raw(lambda / 8.0) * (k + sigma.eval_raw(lambda / 16.0))
                    / (lambda * eps);
                cbar * q * q
            }
            RNode::Custom { f, .. } => f(lambda, eps),
            RNode::Labeled { inner, .. } => inner.eval_raw(lambda, eps),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match &*self.node {
            RNode::Constant { value } => {
                Provenance::new("constant_rate", KIND_RATE).with_param("value", *value)
            }
            RNode::FromBoundedness { rho } => {
                Provenance::new("rate_from_boundedness", KIND_RATE).with_child(rho.provenance())
            }
            RNode::Supermartingale { k } => Provenance::new("supermartingale_rate", KIND_RATE)
                .with_param("k", *k)
                .with_param("c", super::robbins_siegmund::SUPERMARTINGALE_CONSTANT),
            RNode::Sum { phi, psi } => Provenance::new("sum_rate", KIND_RATE)
                .with_child(phi.provenance())
                .with_child(psi.provenance()),
            RNode::Product {
                phi,
                psi,
                rho,
                sigma,
            } => Provenance::new("product_rate", KIND_RATE)
                .with_child(phi.provenance())
                .with_child(psi.provenance())
                .with_child(rho.provenance())
                .with_child(sigma.provenance()),
            RNode::RsU { k, sigma } => Provenance::new("rs_u_rate", KIND_RATE)
                .with_param("k", *k)
                .with_param("c", super::robbins_siegmund::SUPERMARTINGALE_CONSTANT)
                .with_child(sigma.provenance()),
            RNode::RsClosed {
                k,
                cbar,
                rho,
                sigma,
            } => Provenance::new("rs_closed_rate", KIND_RATE)
                .with_param("k", *k)
                .with_param("cbar", *cbar)
                .with_child(rho.provenance())
                .with_child(sigma.provenance()),
            RNode::Custom { name, .. } => Provenance::new("custom_rate", KIND_RATE)
                .with_note(&format!("opaque function `{name}`")),
            RNode::Labeled { label, inner } => inner.provenance().with_label(label),
        }
    }

    pub(crate) fn rebuild(p: &Provenance) -> Result<Self, ModuliError> {
        let rebuilt = match p.rule.as_str() {
            "constant_rate" => Self::constant(param(p, "value")?)?,
            "rate_from_boundedness" => {
                learnable_from_boundedness(&BoundednessModulus::rebuild(child(p, 0)?)?)
            }
            "supermartingale_rate" => {
                super::robbins_siegmund::supermartingale_learnable(param(p, "k")?)?
            }
            "sum_rate" => sum_learnable(&Self::rebuild(child(p, 0)?)?, &Self::rebuild(child(p, 1)?)?),
            "product_rate" => product_learnable(
                &Self::rebuild(child(p, 0)?)?,
                &Self::rebuild(child(p, 1)?)?,
                &BoundednessModulus::rebuild(child(p, 2)?)?,
                &BoundednessModulus::rebuild(child(p, 3)?)?,
            ),
            "rs_u_rate" => Self::from_node(RNode::RsU {
                k: param(p, "k")?,
                sigma: BoundednessModulus::rebuild(child(p, 0)?)?,
            }),
            "rs_closed_rate" => Self::from_node(RNode::RsClosed {
                k: param(p, "k")?,
                cbar: param(p, "cbar")?,
                rho: BoundednessModulus::rebuild(child(p, 0)?)?,
                sigma: BoundednessModulus::rebuild(child(p, 1)?)?,
            }),
            other => {
                return Err(ModuliError::Unrebuildable {
                    rule: other.to_owned(),
                    reason: "not a learnable-rate rule or an opaque custom function".to_owned(),
                })
            }
        };
        Ok(match &p.label {
            Some(label) => rebuilt.labeled(label),
            None => rebuilt,
        })
    }

    /// Spot-checks on [`CHECK_GRID`]² that the rate is nonincreasing in each
    /// argument.
    pub fn check_nonincreasing(&self) -> Result<(), ModuliError> {
        for &fixed in &CHECK_GRID {
            let mut prev = f64::INFINITY;
            for &lambda in &CHECK_GRID {
                let v = self.eval_raw(lambda, fixed);
                if !v.is_finite() {
                    return Err(ModuliError::MalformedModulus(format!(
                        "learnable rate not finite at ({lambda}, {fixed})"
                    )));
                }
                if v > prev + GRID_SLACK * prev.abs().max(1.0) {
                    return Err(ModuliError::MalformedModulus(format!(
                        "learnable rate increases in lambda near ({lambda}, {fixed})"
                    )));
                }
                prev = prev.min(v);
            }
            let mut prev = f64::INFINITY;
            for &eps in &CHECK_GRID {
                let v = self.eval_raw(fixed, eps);
                if v > prev + GRID_SLACK * prev.abs().max(1.0) {
                    return Err(ModuliError::MalformedModulus(format!(
                        "learnable rate increases in eps near ({fixed}, {eps})"
                    )));
                }
                prev = prev.min(v);
            }
        }
        Ok(())
    }
}

/// For a pointwise nondecreasing nonnegative process with boundedness
/// modulus `ρ` (in particular, for the partial sums of a nonnegative
/// series), `(λ, ε) ↦ 2ρ(λ/2)/(λε)` is a learnable rate of uniform
/// convergence.
pub fn learnable_from_boundedness(rho: &BoundednessModulus) -> LearnableRate {
    LearnableRate::from_node(RNode::FromBoundedness { rho: rho.clone() })
}

/// Learnable rate for `X_n + Y_n`: `(λ, ε) ↦ φ(λ/2, ε/2) + ψ(λ/2, ε/2)`.
pub fn sum_learnable(phi: &LearnableRate, psi: &LearnableRate) -> LearnableRate {
    LearnableRate::from_node(RNode::Sum {
        phi: phi.clone(),
        psi: psi.clone(),
    })
}

/// Learnable rate for `X_n · Y_n`, where `rho` bounds the X-process and
/// `sigma` bounds the Y-process:
/// `(λ, ε) ↦ φ(λ/4, ε/(2σ(λ/4))) + ψ(λ/4, ε/(2ρ(λ/4)))`.
pub fn product_learnable(
    phi: &LearnableRate,
    psi: &LearnableRate,
    rho: &BoundednessModulus,
    sigma: &BoundednessModulus,
) -> LearnableRate {
    LearnableRate::from_node(RNode::Product {
        phi: phi.clone(),
        psi: psi.clone(),
        rho: rho.clone(),
        sigma: sigma.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conf(l: f64) -> Confidence {
        Confidence::new(l).unwrap()
    }
    fn acc(e: f64) -> Accuracy {
        Accuracy::new(e).unwrap()
    }

    #[test]
    fn rate_from_boundedness_matches_formula() {
        // rho ≡ 5, λ=0.1, ε=0.2 → 500.
        let rho = BoundednessModulus::constant(5.0).unwrap();
        let phi = learnable_from_boundedness(&rho);
        assert_eq!(phi.eval(conf(0.1), acc(0.2)), 500.0);

        // rho ≡ 1, λ = ε → 1⁻: tends to 2.
        let one = BoundednessModulus::constant(1.0).unwrap();
        let phi1 = learnable_from_boundedness(&one);
        let near_one = 1.0 - 1e-12;
        assert!((phi1.eval(conf(near_one), acc(near_one)) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rate_from_boundedness_covers_geometric_partial_sums() {
        // Partial sums S_0 = 0, S_{n+1} = S_n + 2^{-n-1} are nondecreasing
        // with sup < 1, so rho ≡ 1 works. Among the dyadic windows
        // [0;1], [1;2], [2;4], ... only the first has oscillation >= 0.5,
        // so the index of the first bad window (0) stays below the rate.
        let mut sums = vec![0.0f64];
        for n in 0..64 {
            sums.push(sums[n] + 2f64.powi(-(n as i32) - 1));
        }
        let mut windows = vec![(0usize, 1usize)];
        let mut k = 1usize;
        while 2 * k < sums.len() {
            windows.push((k, 2 * k));
            k *= 2;
        }
        let eps = 0.5;
        let bad: Vec<usize> = windows
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| (sums[b] - sums[a]).abs() >= eps)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(bad, vec![0]);

        let phi = learnable_from_boundedness(&BoundednessModulus::constant(1.0).unwrap());
        let bound = phi.eval(conf(0.5), acc(0.5));
        assert_eq!(bound, 8.0);
        assert!(bad.iter().all(|&i| (i as f64) <= bound));
    }

    #[test]
    fn sum_rate_matches_formula_and_is_symmetric() {
        // phi(λ,ε)=1/(λε), ψ(λ,ε)=2/(λε), λ=0.2, ε=0.5 → 40+80=120.
        let phi = LearnableRate::custom("inv", |l, e| 1.0 / (l * e));
        let psi = LearnableRate::custom("inv2", |l, e| 2.0 / (l * e));
        let s = sum_learnable(&phi, &psi);
        assert_eq!(s.eval(conf(0.2), acc(0.5)), 120.0);
        for &l in &CHECK_GRID {
            for &e in &CHECK_GRID {
                assert_eq!(
                    sum_learnable(&phi, &psi).eval(conf(l), acc(e)),
                    sum_learnable(&psi, &phi).eval(conf(l), acc(e)),
                );
            }
        }
    }

    #[test]
    fn product_rate_matches_formula() {
        // phi=ψ=1/(λε), ρ=σ ≡ 2, λ=ε=0.5 → 128.
        let phi = LearnableRate::custom("inv", |l, e| 1.0 / (l * e));
        let two = BoundednessModulus::constant(2.0).unwrap();
        let p = product_learnable(&phi, &phi, &two, &two);
        assert_eq!(p.eval(conf(0.5), acc(0.5)), 128.0);
    }

    #[test]
    fn product_with_constant_one_factor_reduces_to_left_rate() {
        // Y ≡ 1: σ ≡ 1 and ψ ≡ 0, so the product rate equals phi(λ/4, ε/2).
        let phi = LearnableRate::custom("inv", |l, e| 1.0 / (l * e));
        let zero = LearnableRate::constant(0.0).unwrap();
        let one = BoundednessModulus::constant(1.0).unwrap();
        let rho = BoundednessModulus::ville(2.0).unwrap();
        let p = product_learnable(&phi, &zero, &rho, &one);
        for &l in &CHECK_GRID {
            for &e in &CHECK_GRID {
                let got = p.eval(conf(l), acc(e));
                let want = phi.eval_raw(l / 4.0, e / 2.0);
                assert!(got >= want);
                assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn grid_check_rejects_increasing_rate() {
        let bad = LearnableRate::custom("increasing", |l, e| l * e);
        assert!(bad.check_nonincreasing().is_err());
        let good = LearnableRate::custom("inv", |l, e| 1.0 / (l * e));
        assert!(good.check_nonincreasing().is_ok());
    }

    #[test]
    fn provenance_round_trips_bit_for_bit() {
        let rho = BoundednessModulus::ville(2.0).unwrap();
        let sigma = BoundednessModulus::constant(3.0).unwrap();
        let phi = learnable_from_boundedness(&rho);
        let psi = LearnableRate::constant(7.0).unwrap();
        let rate = product_learnable(&sum_learnable(&phi, &psi), &phi, &rho, &sigma);
        let json = rate.provenance().to_json();
        let tree: Provenance = serde_json::from_str(&json).unwrap();
        let rebuilt = LearnableRate::rebuild(&tree).unwrap();
        for &l in &CHECK_GRID {
            for &e in &CHECK_GRID {
                assert_eq!(
                    rebuilt.eval(conf(l), acc(e)).to_bits(),
                    rate.eval(conf(l), acc(e)).to_bits()
                );
            }
        }
    }
}

//! Liminf-moduli, drift moduli and rates of divergence.
//!
//! For a recursion whose negative drift has the step-size form `B_n = u_n
//! V_n` with `sum u_i = ∞`, a modulus of uniform boundedness `χ` for
//! `sum u_i V_i` converts into a *liminf-modulus* for `V_n`:
//!
//! ```text
//! P(∀ k ∈ [n; n + Φ(λ, ε, n)] : V_k >= ε) < λ,
//! Φ(λ, ε, n) = r(n, χ(λ)/ε),
//! ```
//!
//! where `r(n, x)` is a rate of divergence for the step sizes. A drift
//! modulus `δ(ε, K)` — a quantitative lower bound on `V_n` whenever
//! `ε <= X_n <= K` — then transfers the liminf-modulus from `V` to `X`.

use std::fmt;
use std::sync::Arc;

use super::boundedness::BoundednessModulus;
use super::provenance::Provenance;
use super::robbins_siegmund::rs_x_boundedness;
use super::{ceil_to_index, Accuracy, Confidence, ModuliError};

pub(crate) const KIND_LIMINF: &str = "liminf modulus";
pub(crate) const KIND_DRIFT: &str = "drift modulus";
pub(crate) const KIND_DIVERGENCE: &str = "rate of divergence";

/// Default cap on the number of terms a divergence scan may visit.
pub const DEFAULT_DIVERGENCE_SCAN_CAP: u64 = 100_000_000;

/// The largest double strictly below 1, used when clamping drift values.
const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Clone)]
enum DivKind {
    /// Constant steps `u_i = u`: `r(n, x) = ⌈x/u⌉`.
    ConstantStep { u: f64 },
    /// Generic schedule: scan partial sums until they reach `x`, erroring
    /// past the cap.
    Scan {
        descriptor: String,
        steps: Arc<dyn Fn(u64) -> f64 + Send + Sync>,
        cap: u64,
    },
}

/// `r(n, x)` with `sum_{i=n}^{n+r(n,x)} u_i >= x` for a step schedule.
#[derive(Clone)]
pub struct RateOfDivergence {
    kind: DivKind,
}

impl fmt::Debug for RateOfDivergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DivKind::ConstantStep { u } => write!(f, "RateOfDivergence(constant {u})"),
            DivKind::Scan { descriptor, .. } => write!(f, "RateOfDivergence(scan {descriptor})"),
        }
    }
}

impl RateOfDivergence {
    pub fn constant_step(u: f64) -> Result<Self, ModuliError> {
        if !u.is_finite() || u <= 0.0 {
            return Err(ModuliError::NonPositive {
                what: "step size",
                value: u,
            });
        }
        Ok(Self {
            kind: DivKind::ConstantStep { u },
        })
    }

    /// Rate of divergence by scanning partial sums of an arbitrary
    /// nonnegative schedule. Evaluation errors once `cap` terms fail to
    /// reach the target.
    pub fn scanning(
        descriptor: &str,
        steps: impl Fn(u64) -> f64 + Send + Sync + 'static,
        cap: u64,
    ) -> Self {
        Self {
            kind: DivKind::Scan {
                descriptor: descriptor.to_owned(),
                steps: Arc::new(steps),
                cap,
            },
        }
    }

    /// Least `m` such that the step-size sum over `[n; n+m]` reaches `x`.
    pub fn eval(&self, n: u64, x: f64) -> Result<u64, ModuliError> {
        if x <= 0.0 {
            return Ok(0);
        }
        match &self.kind {
            DivKind::ConstantStep { u } => {
                // ceil(x/u) steps always cover x, and the interval [n; n+m]
                // holds m+1 terms, so this is (slightly generously) enough.
                ceil_to_index(x / u)
            }
            DivKind::Scan { steps, cap, .. } => {
                let mut acc = 0.0f64;
                for m in 0..*cap {
                    acc += steps(n + m);
                    if acc >= x {
                        return Ok(m);
                    }
                }
                Err(ModuliError::DivergenceScanExhausted {
                    target: x,
                    from: n,
                    cap: *cap,
                })
            }
        }
    }

    pub fn provenance(&self) -> Provenance {
        match &self.kind {
            DivKind::ConstantStep { u } => {
                Provenance::new("constant_step_divergence", KIND_DIVERGENCE).with_param("u", *u)
            }
            DivKind::Scan {
                descriptor, cap, ..
            } => Provenance::new("scan_divergence", KIND_DIVERGENCE)
                .with_param("cap", *cap as f64)
                .with_detail(serde_json::json!({ "schedule": descriptor })),
        }
    }
}

#[derive(Clone)]
enum DriftKind {
    /// `δ(ε, K) = ε`.
    Identity,
    /// The Robbins-Monro construction `δ(ε, K) = μ(√min{ε, 1/K})`.
    FromMu {
        name: String,
        mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    },
}

/// `δ(ε, K)`: a positive lower bound on the paired process `V_n` whenever
/// `ε <= X_n <= K`.
#[derive(Clone)]
pub struct DriftModulus {
    kind: DriftKind,
}

impl fmt::Debug for DriftModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DriftModulus({})", self.provenance().rule)
    }
}

impl DriftModulus {
    pub fn identity() -> Self {
        Self {
            kind: DriftKind::Identity,
        }
    }

    pub fn custom(name: &str, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: DriftKind::Custom {
                name: name.to_owned(),
                f: Arc::new(f),
            },
        }
    }

    pub fn eval(&self, eps: f64, k: f64) -> Result<f64, ModuliError> {
        let v = match &self.kind {
            DriftKind::Identity => eps,
            DriftKind::FromMu { mu, .. } => mu(eps.min(1.0 / k).sqrt()),
            DriftKind::Custom { f, .. } => f(eps, k),
        };
        if !v.is_finite() || v <= 0.0 {
            return Err(ModuliError::NonPositiveDrift { value: v, eps, k });
        }
        Ok(v)
    }

    pub fn provenance(&self) -> Provenance {
        match &self.kind {
            DriftKind::Identity => Provenance::new("identity_drift", KIND_DRIFT),
            DriftKind::FromMu { name, .. } => Provenance::new("drift_from_mu", KIND_DRIFT)
                .with_detail(serde_json::json!({ "mu": name })),
            DriftKind::Custom { name, .. } => Provenance::new("custom_drift", KIND_DRIFT)
                .with_note(&format!("opaque function `{name}`")),
        }
    }
}

/// The Robbins-Monro drift modulus `δ(ε, K) = μ(√min{ε, 1/K})`, for `μ`
/// positive and nondecreasing on `(0, 1]` (spot-checked on a grid).
pub fn delta_from_mu(
    name: &str,
    mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Result<DriftModulus, ModuliError> {
    let mut prev = 0.0f64;
    for i in 1..=16 {
        let t = i as f64 / 16.0;
        let v = mu(t);
        if !v.is_finite() || v <= 0.0 {
            return Err(ModuliError::MalformedModulus(format!(
                "mu({t}) = {v} is not positive"
            )));
        }
        if v < prev - 1e-12 {
            return Err(ModuliError::MalformedModulus(format!(
                "mu decreases near t={t}"
            )));
        }
        prev = prev.max(v);
    }
    Ok(DriftModulus {
        kind: DriftKind::FromMu {
            name: name.to_owned(),
            mu: Arc::new(mu),
        },
    })
}

#[derive(Clone)]
enum LimKind {
    Constant(u64),
    /// `Φ(λ, ε, n) = r(n, χ(λ)/ε)`.
    FromDivergence {
        chi: BoundednessModulus,
        r: RateOfDivergence,
    },
    /// `Ψ(λ, ε, n) = Φ(λ/2, δ(ε, τ(λ/2)), n)`, with `δ` values `>= 1`
    /// clamped to just below one (a larger accuracy argument only weakens
    /// the demand on `Φ`).
    Transfer {
        phi: LiminfModulus,
        delta: DriftModulus,
        tau: BoundednessModulus,
    },
    Custom {
        name: String,
        f: Arc<dyn Fn(f64, f64, u64) -> u64 + Send + Sync>,
    },
}

/// `Φ(λ, ε, n)`: bounds the window after `n` within which the process drops
/// below `ε` except with probability `< λ`.
#[derive(Clone)]
pub struct LiminfModulus {
    kind: Arc<LimKind>,
}

impl fmt::Debug for LiminfModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LiminfModulus({})", self.provenance().rule)
    }
}

impl LiminfModulus {
    pub fn constant(value: u64) -> Self {
        Self {
            kind: Arc::new(LimKind::Constant(value)),
        }
    }

    pub fn custom(
        name: &str,
        f: impl Fn(f64, f64, u64) -> u64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: Arc::new(LimKind::Custom {
                name: name.to_owned(),
                f: Arc::new(f),
            }),
        }
    }

    pub fn eval(&self, lambda: Confidence, eps: Accuracy, n: u64) -> Result<u64, ModuliError> {
        self.eval_raw(lambda.value(), eps.value(), n)
    }

    /// As [`eval`](Self::eval), also reporting whether any drift value was
    /// clamped below one during transfer.
    pub fn eval_detailed(
        &self,
        lambda: Confidence,
        eps: Accuracy,
        n: u64,
    ) -> Result<(u64, bool), ModuliError> {
        let mut clamped = false;
        let v = self.eval_inner(lambda.value(), eps.value(), n, &mut clamped)?;
        Ok((v, clamped))
    }

    pub(crate) fn eval_raw(&self, lambda: f64, eps: f64, n: u64) -> Result<u64, ModuliError> {
        let mut clamped = false;
        self.eval_inner(lambda, eps, n, &mut clamped)
    }

    fn eval_inner(
        &self,
        lambda: f64,
        eps: f64,
        n: u64,
        clamped: &mut bool,
    ) -> Result<u64, ModuliError> {
        match &*self.kind {
            LimKind::Constant(v) => Ok(*v),
            LimKind::FromDivergence { chi, r } => r.eval(n, chi.eval_raw(lambda) / eps),
            LimKind::Transfer { phi, delta, tau } => {
                let k = tau.eval_raw(lambda / 2.0);
                let mut d = delta.eval(eps, k)?;
                if d >= 1.0 {
                    d = ONE_MINUS;
                    *clamped = true;
                }
                phi.eval_inner(lambda / 2.0, d, n, clamped)
            }
            LimKind::Custom { f, .. } => Ok(f(lambda, eps, n)),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match &*self.kind {
            LimKind::Constant(v) => {
                Provenance::new("constant_liminf", KIND_LIMINF).with_param("value", *v as f64)
            }
            LimKind::FromDivergence { chi, r } => {
                Provenance::new("liminf_from_divergence", KIND_LIMINF)
                    .with_child(chi.provenance())
                    .with_child(r.provenance())
            }
            LimKind::Transfer { phi, delta, tau } => {
                Provenance::new("liminf_transfer", KIND_LIMINF)
                    .with_note("drift values >= 1 clamp to just below one")
                    .with_child(phi.provenance())
                    .with_child(delta.provenance())
                    .with_child(tau.provenance())
            }
            LimKind::Custom { name, .. } => Provenance::new("custom_liminf", KIND_LIMINF)
                .with_note(&format!("opaque function `{name}`")),
        }
    }
}

/// Liminf-modulus for the stepped process from a boundedness modulus `χ`
/// for `sum u_i V_i` and a rate of divergence `r` for the steps:
/// `Φ(λ, ε, n) = r(n, χ(λ)/ε)`.
pub fn liminf_modulus(chi: &BoundednessModulus, r: &RateOfDivergence) -> LiminfModulus {
    LiminfModulus {
        kind: Arc::new(LimKind::FromDivergence {
            chi: chi.clone(),
            r: r.clone(),
        }),
    }
}

/// Transfers a liminf-modulus from `V` to `X` through a drift modulus:
/// `Ψ(λ, ε, n) = Φ(λ/2, δ(ε, τ(λ/2)), n)`, where `τ` bounds `X`.
pub fn liminf_transfer(
    phi: &LiminfModulus,
    delta: &DriftModulus,
    tau: &BoundednessModulus,
) -> LiminfModulus {
    LiminfModulus {
        kind: Arc::new(LimKind::Transfer {
            phi: phi.clone(),
            delta: delta.clone(),
            tau: tau.clone(),
        }),
    }
}

/// Iteration bound for finding an approximate solution under constant steps
/// `u_i = u`: with constant moduli `ρ ≡ L`, `σ ≡ M`,
///
/// ```text
/// f(λ, ε) = ⌈20 L (K + M) / (u λ δ(ε, τ(λ/2)))⌉
/// ```
///
/// satisfies `P(∃ k <= f(λ, ε) : X_k < ε) > 1 - λ`.
pub fn constant_step_solution_bound(
    k: f64,
    l: f64,
    m: f64,
    u: f64,
    delta: &DriftModulus,
    lambda: Confidence,
    eps: Accuracy,
) -> Result<u64, ModuliError> {
    if !u.is_finite() || u <= 0.0 {
        return Err(ModuliError::NonPositive {
            what: "step size",
            value: u,
        });
    }
    let rho = BoundednessModulus::constant(l)?;
    let sigma = BoundednessModulus::constant(m)?;
    let tau = rs_x_boundedness(k, &rho, &sigma)?;
    let d = delta.eval(eps.value(), tau.eval_raw(lambda.value() / 2.0))?;
    ceil_to_index(20.0 * l * (k + m) / (u * lambda.value() * d))
}

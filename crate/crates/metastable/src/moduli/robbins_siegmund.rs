//! Quantitative bounds for almost-supermartingale recursions.
//!
//! Consider nonnegative integrable adapted processes satisfying
//!
//! ```text
//! E[X_{n+1} | F_n] <= (1 + A_n) X_n - B_n + C_n
//! ```
//!
//! with `K > E[X_0]`, `K > 1`, and nonincreasing moduli
//! `ρ, σ : (0,1) -> [1, ∞)` for `prod (1 + A_i)` and `sum C_i`. The
//! classical conclusion is that `X_n` converges almost surely and
//! `sum B_i < ∞`; the functions built here make both conclusions
//! quantitative:
//!
//! * [`rs_learnable_pipeline`] / [`rs_learnable_closed`] — learnable rates
//!   of uniform convergence for `X_n`;
//! * [`rs_bsum_boundedness`] — a modulus of uniform boundedness `χ` for
//!   `sum B_i`;
//! * [`rs_x_boundedness`] — a modulus of uniform boundedness `τ` for `X_n`
//!   itself.
//!
//! The derivation compensates the recursion into a supermartingale
//! `U_n = X_n / P_n - sum C̃_i` (with `P_n = prod_{i<n} (1 + A_i)`), stops
//! it when the compensator exceeds `σ`, applies the supermartingale rate
//! [`supermartingale_learnable`] and Ville's inequality to the stopped
//! process, and then undoes the compensation with the sum and product
//! composition rules. The pipeline rate is exactly that composition; the
//! closed form dominates it with a single displayed formula.

use super::boundedness::BoundednessModulus;
use super::rate::{
    learnable_from_boundedness, product_learnable, sum_learnable, LearnableRate, RNode,
};
use super::ModuliError;

/// Universal constant in the supermartingale fluctuation rate.
pub const SUPERMARTINGALE_CONSTANT: f64 = 200.0;

/// Constant of the closed-form almost-supermartingale rate: dominating each
/// pipeline term under the standing assumptions (`ρ, σ >= 1` nonincreasing,
/// `λ, ε ∈ (0,1)`, `K > 1`) costs a factor `4096` on the supermartingale
/// constant plus `336` for the lower-order terms.
pub const RS_CLOSED_CONSTANT: f64 = 4096.0 * SUPERMARTINGALE_CONSTANT + 336.0;

fn require_k(k: f64) -> Result<(), ModuliError> {
    if !k.is_finite() || k <= 1.0 {
        return Err(ModuliError::TooSmall {
            what: "K",
            threshold: 1.0,
            value: k,
        });
    }
    Ok(())
}

fn require_rs_moduli(
    rho: &BoundednessModulus,
    sigma: &BoundednessModulus,
) -> Result<(), ModuliError> {
    rho.check_rs_shape()?;
    sigma.check_rs_shape()?;
    Ok(())
}

/// Learnable rate of uniform convergence for a nonnegative supermartingale
/// with `E[U_0] < K`, `K > 1`:
///
/// ```text
/// φ(λ, ε) = c (K / (λ ε))²,   c = 200.
/// ```
pub fn supermartingale_learnable(k: f64) -> Result<LearnableRate, ModuliError> {
    require_k(k)?;
    Ok(LearnableRate::from_node(RNode::Supermartingale { k }))
}

/// `φ₁(λ, ε) = 4c((K + σ(λ/2))/(λε))²`: learnable rate for the compensated
/// supermartingale `U_n` of the recursion, via stopping at compensator level
/// `σ(λ/2)`.
pub fn rs_u_rate(
    k: f64,
    sigma: &BoundednessModulus,
) -> Result<LearnableRate, ModuliError> {
    require_k(k)?;
    sigma.check_rs_shape()?;
    Ok(LearnableRate::rs_u(k, sigma).labeled("phi1"))
}

impl LearnableRate {
    fn rs_u(k: f64, sigma: &BoundednessModulus) -> Self {
        Self::from_node(RNode::RsU {
            k,
            sigma: sigma.clone(),
        })
    }
}

/// `χ₁(λ) = 2(K + σ(λ/2))/λ`: modulus of uniform boundedness for the
/// compensated supermartingale `U_n`, via stopping and Ville's inequality.
pub fn rs_u_boundedness(
    k: f64,
    sigma: &BoundednessModulus,
) -> Result<BoundednessModulus, ModuliError> {
    require_k(k)?;
    sigma.check_rs_shape()?;
    Ok(BoundednessModulus::rs_u_node(k, sigma).labeled("chi1"))
}

/// `φ₂(λ, ε) = 64c((K + σ(λ/4))/(λε))² + 8σ(λ/4)/(λε)`: learnable rate for
/// the rescaled process `X̃_n = X_n / P_n`, built as the sum rule applied to
/// `φ₁` and the partial-sum rate of the compensator.
pub fn rs_xtilde_rate(
    k: f64,
    sigma: &BoundednessModulus,
) -> Result<LearnableRate, ModuliError> {
    require_k(k)?;
    sigma.check_rs_shape()?;
    let phi1 = LearnableRate::rs_u(k, sigma).labeled("phi1");
    let compensator_rate = learnable_from_boundedness(sigma);
    Ok(sum_learnable(&phi1, &compensator_rate).labeled("phi2"))
}

/// `χ₂(λ) = 4(K + σ(λ/4))/λ + σ(λ/2)`: modulus of uniform boundedness for
/// `X̃_n`, built as the sum rule applied to `χ₁` and `σ`.
pub fn rs_xtilde_boundedness(
    k: f64,
    sigma: &BoundednessModulus,
) -> Result<BoundednessModulus, ModuliError> {
    require_k(k)?;
    sigma.check_rs_shape()?;
    let chi1 = BoundednessModulus::rs_u_node(k, sigma).labeled("chi1");
    Ok(super::boundedness::sum_boundedness(&chi1, sigma).labeled("chi2"))
}

/// The un-simplified learnable rate for `X_n`, exactly as the composition
/// derives it:
///
/// ```text
/// φ(λ, ε) = φ₂(λ/4, ε/(2ρ(λ/4))) + 16 χ₂(λ/4) ρ(λ/8) / (λ ε)
/// ```
///
/// The provenance tree records the intermediates `φ₁`, `χ₁`, `φ₂`, `χ₂`.
pub fn rs_learnable_pipeline(
    k: f64,
    rho: &BoundednessModulus,
    sigma: &BoundednessModulus,
) -> Result<LearnableRate, ModuliError> {
    require_k(k)?;
    require_rs_moduli(rho, sigma)?;
    let phi2 = rs_xtilde_rate(k, sigma)?;
    let chi2 = rs_xtilde_boundedness(k, sigma)?;
    // X_n = X̃_n · P_n: the product rule pairs the X̃ rate with the modulus
    // ρ of the monotone factor P_n, whose own rate comes from monotonicity.
    let p_rate = learnable_from_boundedness(rho);
    Ok(product_learnable(&phi2, &p_rate, &chi2, rho).labeled("rs_pipeline"))
}

/// The closed-form learnable rate for `X_n`:
///
/// ```text
/// φ(λ, ε) = c̄ (ρ(λ/8)(K + σ(λ/16))/(λε))²,   c̄ = 819 536,
/// ```
///
/// which dominates [`rs_learnable_pipeline`] pointwise.
pub fn rs_learnable_closed(
    k: f64,
    rho: &BoundednessModulus,
    sigma: &BoundednessModulus,
) -> Result<LearnableRate, ModuliError> {
    require_k(k)?;
    require_rs_moduli(rho, sigma)?;
    Ok(LearnableRate::from_node(RNode::RsClosed {
        k,
        cbar: RS_CLOSED_CONSTANT,
        rho: rho.clone(),
        sigma: sigma.clone(),
    }))
}

/// `χ(λ) = 10 ρ(λ/2)(K + σ(λ/8))/λ`: modulus of uniform boundedness for
/// `sum B_i`, built as the product rule applied to `ρ` and
/// `χ₃(λ) = 5(K + σ(λ/4))/λ` (which dominates `χ₁(λ/2) + σ(λ/2)`).
pub fn rs_bsum_boundedness(
    k: f64,
    rho: &BoundednessModulus,
    sigma: &BoundednessModulus,
) -> Result<BoundednessModulus, ModuliError> {
    require_k(k)?;
    require_rs_moduli(rho, sigma)?;
    let chi3 = BoundednessModulus::rs_bsum_tilde_node(k, sigma).labeled("chi3");
    Ok(super::boundedness::product_boundedness(rho, &chi3).labeled("chi"))
}

/// `τ(λ) = 9(K + σ(λ/8)) ρ(λ/2) / λ`: modulus of uniform boundedness for
/// `X_n` itself, dominating `χ₂(λ/2) · ρ(λ/2)`.
pub fn rs_x_boundedness(
    k: f64,
    rho: &BoundednessModulus,
    sigma: &BoundednessModulus,
) -> Result<BoundednessModulus, ModuliError> {
    require_k(k)?;
    require_rs_moduli(rho, sigma)?;
    Ok(BoundednessModulus::rs_x_node(k, rho, sigma).labeled("tau"))
}

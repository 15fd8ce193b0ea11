//! The built-in process families and their samplers.

use serde::Serialize;

use super::rng::SplitMix64;
use super::{Certificate, HypothesisFlags, PathTrace, ProcessError, ProcessFamily, StepSchedule};
use crate::moduli::{BoundednessModulus, DriftModulus};

/// How the conditional-mean residual of the general recursion is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    /// No residual: the recursion holds pathwise as an equality.
    None,
    /// Multiply the compensator term by a fair `{0, 2}` coin, a
    /// martingale-difference perturbation with exact conditional mean.
    #[default]
    TwoPoint,
}

/// How the SGD noise `ζ_n` is distributed (mean 0, variance `s²`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `ζ = ±s` with probability 1/2 each; conditional moments are exact.
    #[default]
    TwoPoint,
    Gaussian,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub(crate) enum FamilyKind {
    MultiplicativeSupermartingale {
        u0: f64,
        factor_values: Vec<f64>,
        factor_probs: Vec<f64>,
    },
    SgdQuadratic {
        x0: f64,
        steps: StepSchedule,
        noise_sd: f64,
        noise: NoiseKind,
    },
    GeneralRs {
        a: StepSchedule,
        cbar: StepSchedule,
        residual: ResidualKind,
        x0: f64,
    },
    DeterministicRs {
        alpha: StepSchedule,
        beta: StepSchedule,
        gamma: StepSchedule,
        x0: f64,
    },
}

impl FamilyKind {
    pub(crate) fn name(&self) -> &'static str {
        match self {
            FamilyKind::MultiplicativeSupermartingale { .. } => "multiplicative_supermartingale",
            FamilyKind::SgdQuadratic { .. } => "sgd_quadratic",
            FamilyKind::GeneralRs { .. } => "general_rs",
            FamilyKind::DeterministicRs { .. } => "deterministic_rs",
        }
    }

    pub(crate) fn sample(&self, seed: u64, horizon: u64) -> PathTrace {
        let n = horizon as usize + 1;
        let mut rng = SplitMix64::new(seed);
        match self {
            FamilyKind::MultiplicativeSupermartingale {
                u0,
                factor_values,
                factor_probs,
            } => {
                let mut x = Vec::with_capacity(n);
                let mut cur = *u0;
                x.push(cur);
                for _ in 0..horizon {
                    let draw = rng.next_f64();
                    let mut acc = 0.0;
                    let mut factor = *factor_values.last().expect("validated nonempty");
                    for (v, p) in factor_values.iter().zip(factor_probs) {
                        acc += p;
                        if draw < acc {
                            factor = *v;
                            break;
                        }
                    }
                    cur *= factor;
                    x.push(cur);
                }
                PathTrace {
                    x,
                    a: None,
                    b: None,
                    c: None,
                    v: None,
                    seed,
                    horizon,
                }
            }
            FamilyKind::SgdQuadratic {
                x0,
                steps,
                noise_sd,
                noise,
            } => {
                let mut x = Vec::with_capacity(n);
                let mut b = Vec::with_capacity(n);
                let mut c = Vec::with_capacity(n);
                let mut v = Vec::with_capacity(n);
                let mut iterate = *x0;
                for k in 0..n as u64 {
                    let u = steps.value(k);
                    let sq = iterate * iterate;
                    x.push(sq);
                    b.push(u * (2.0 - u) * sq);
                    c.push(u * u * noise_sd * noise_sd);
                    v.push((2.0 - u) * sq);
                    if k < horizon {
                        let zeta = match noise {
                            NoiseKind::TwoPoint => {
                                if rng.next_bool() {
                                    *noise_sd
                                } else {
                                    -noise_sd
                                }
                            }
                            NoiseKind::Gaussian => noise_sd * rng.next_gaussian(),
                        };
                        iterate = (1.0 - u) * iterate - u * zeta;
                    }
                }
                PathTrace {
                    x,
                    a: None,
                    b: Some(b),
                    c: Some(c),
                    v: Some(v),
                    seed,
                    horizon,
                }
            }
            FamilyKind::GeneralRs {
                a,
                cbar,
                residual,
                x0,
            } => {
                let mut x = Vec::with_capacity(n);
                let mut a_track = Vec::with_capacity(n);
                let mut b_track = Vec::with_capacity(n);
                let mut c_track = Vec::with_capacity(n);
                let mut cur = *x0;
                for k in 0..n as u64 {
                    let a_k = a.value(k);
                    // C_k is drawn at step k, so it is known before X_{k+1}:
                    // E[X_{k+1} | F_k] = (1 + a_k) X_k + C_k exactly.
                    let c_k = cbar.value(k) * rng.next_f64();
                    x.push(cur);
                    a_track.push(a_k);
                    b_track.push(0.0);
                    c_track.push(c_k);
                    if k < horizon {
                        let z = match residual {
                            ResidualKind::None => 1.0,
                            ResidualKind::TwoPoint => {
                                if rng.next_bool() {
                                    2.0
                                } else {
                                    0.0
                                }
                            }
                        };
                        cur = (1.0 + a_k) * cur + c_k * z;
                    }
                }
                PathTrace {
                    x,
                    a: Some(a_track),
                    b: Some(b_track),
                    c: Some(c_track),
                    v: None,
                    seed,
                    horizon,
                }
            }
            FamilyKind::DeterministicRs {
                alpha,
                beta,
                gamma,
                x0,
            } => {
                let (x, b_track) = run_deterministic(alpha, beta, gamma, *x0, horizon).0;
                let a_track = (0..n as u64).map(|k| alpha.value(k)).collect();
                let c_track = (0..n as u64).map(|k| gamma.value(k)).collect();
                PathTrace {
                    x,
                    a: Some(a_track),
                    b: Some(b_track),
                    c: Some(c_track),
                    v: None,
                    seed,
                    horizon,
                }
            }
        }
    }

    pub(crate) fn clamp_events(&self, horizon: u64) -> Vec<u64> {
        match self {
            FamilyKind::DeterministicRs {
                alpha,
                beta,
                gamma,
                x0,
            } => run_deterministic(alpha, beta, gamma, *x0, horizon).1,
            _ => Vec::new(),
        }
    }
}

type DeterministicRun = ((Vec<f64>, Vec<f64>), Vec<u64>);

/// Runs `x_{n+1} = (1+α_n)x_n - β_n + γ_n`, clamping `β` down whenever the
/// full subtraction would push the iterate below zero. Returns the x-track,
/// the effective-β track, and the clamped indices.
fn run_deterministic(
    alpha: &StepSchedule,
    beta: &StepSchedule,
    gamma: &StepSchedule,
    x0: f64,
    horizon: u64,
) -> DeterministicRun {
    let n = horizon as usize + 1;
    let mut x = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut clamped = Vec::new();
    let mut cur = x0;
    for k in 0..n as u64 {
        let grown = (1.0 + alpha.value(k)) * cur + gamma.value(k);
        let wanted = beta.value(k);
        let effective = wanted.min(grown);
        if effective < wanted {
            clamped.push(k);
        }
        x.push(cur);
        b.push(effective);
        if (k as usize) < n - 1 {
            cur = grown - effective;
        }
    }
    ((x, b), clamped)
}

/// Canonical nonnegative supermartingale test family: `U_{n+1} = U_n ξ_n`
/// with `ξ` i.i.d. from a finite distribution of nonnegative factors with
/// mean at most one.
///
/// Certificate: `K = max(2 u_0, 2) > E[U_0] = u_0`; the recursion holds
/// with `A ≡ B ≡ C ≡ 0`, so `ρ ≡ σ ≡ 1`.
pub fn multiplicative_supermartingale(
    u0: f64,
    factors: &[(f64, f64)],
) -> Result<ProcessFamily, ProcessError> {
    if !u0.is_finite() || u0 < 0.0 {
        return Err(ProcessError::BadInitialValue(u0));
    }
    if factors.is_empty() {
        return Err(ProcessError::BadFactorProbabilities(0.0));
    }
    let mut total_p = 0.0;
    let mut mean = 0.0;
    for &(v, p) in factors {
        if !v.is_finite() || v < 0.0 {
            return Err(ProcessError::NegativeFactor(v));
        }
        if !p.is_finite() || p < 0.0 {
            return Err(ProcessError::BadFactorProbabilities(p));
        }
        total_p += p;
        mean += v * p;
    }
    if (total_p - 1.0).abs() > 1e-9 {
        return Err(ProcessError::BadFactorProbabilities(total_p));
    }
    if mean > 1.0 + 1e-12 {
        return Err(ProcessError::MeanAboveOne(mean));
    }
    let one = BoundednessModulus::constant(1.0)?;
    Ok(ProcessFamily {
        kind: FamilyKind::MultiplicativeSupermartingale {
            u0,
            factor_values: factors.iter().map(|f| f.0).collect(),
            factor_probs: factors.iter().map(|f| f.1).collect(),
        },
        certificate: Certificate {
            k: (2.0 * u0).max(2.0),
            initial_mean: u0,
            rho: Some(one.clone()),
            sigma: Some(one),
            steps: None,
            divergence: None,
            drift: None,
        },
        flags: HypothesisFlags {
            is_supermartingale: true,
            is_rs: true,
            is_rm: false,
            is_deterministic: false,
        },
    })
}

/// Stochastic gradient descent on the quadratic `x²/2`:
/// `x_{n+1} = x_n - u_n (x_n + ζ_n)` with i.i.d. mean-zero noise of
/// standard deviation `s`, tracked through `X_n = x_n²`.
///
/// The recursion holds as a conditional-expectation identity with
/// `A_n ≡ 0`, `B_n = u_n(2-u_n)X_n = u_n V_n`, `C_n = u_n² s²`:
///
/// * `ρ ≡ 1`;
/// * `σ ≡ max(1, s² · sum u_i²)` when the steps are square-summable (for
///   `s > 0` non-square-summable steps leave no `σ` certificate);
/// * `δ(ε, K) = ε`, since `u_n <= 1` forces `V_n >= X_n`;
/// * `r` from the step schedule, when its partial sums diverge.
pub fn sgd_quadratic(
    x0: f64,
    steps: StepSchedule,
    noise_sd: f64,
) -> Result<ProcessFamily, ProcessError> {
    sgd_quadratic_with_noise(x0, steps, noise_sd, NoiseKind::TwoPoint)
}

/// As [`sgd_quadratic`], selecting the noise distribution.
pub fn sgd_quadratic_with_noise(
    x0: f64,
    steps: StepSchedule,
    noise_sd: f64,
    noise: NoiseKind,
) -> Result<ProcessFamily, ProcessError> {
    if !x0.is_finite() {
        return Err(ProcessError::BadInitialValue(x0));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(ProcessError::BadNoise(noise_sd));
    }
    steps.validate_nonnegative()?;
    let sup = steps.sup_value();
    if sup > 1.0 {
        return Err(ProcessError::StepAboveOne(sup));
    }
    let sigma = if noise_sd == 0.0 {
        Some(BoundednessModulus::constant(1.0)?)
    } else {
        match steps.sum_of_squares() {
            Some(ss) => Some(BoundednessModulus::constant(
                (noise_sd * noise_sd * ss).max(1.0),
            )?),
            None => None,
        }
    };
    let divergence = steps.divergence_rate().ok();
    Ok(ProcessFamily {
        kind: FamilyKind::SgdQuadratic {
            x0,
            steps: steps.clone(),
            noise_sd,
            noise,
        },
        certificate: Certificate {
            k: (x0 * x0 + 1.0).max(2.0),
            initial_mean: x0 * x0,
            rho: Some(BoundednessModulus::constant(1.0)?),
            sigma,
            steps: Some(steps),
            divergence,
            drift: Some(DriftModulus::identity()),
        },
        flags: HypothesisFlags {
            is_supermartingale: false,
            is_rs: true,
            is_rm: true,
            is_deterministic: false,
        },
    })
}

/// Recursion instance with deterministic coefficient schedules:
/// `X_{n+1} = (1 + a_n) X_n + C_n·Z_{n+1}` where `C_n` is uniform on
/// `[0, c̄_n]` and `Z` is the chosen residual. `B ≡ 0`.
///
/// Certificate: `ρ ≡ max(1, prod (1 + a_i))` and
/// `σ ≡ max(1, sum c̄_i)`, both computed numerically once. Divergent `a`
/// or `c̄` schedules are rejected.
pub fn general_rs(
    a: StepSchedule,
    cbar: StepSchedule,
    residual: ResidualKind,
    x0: f64,
) -> Result<ProcessFamily, ProcessError> {
    if !x0.is_finite() || x0 < 0.0 {
        return Err(ProcessError::BadInitialValue(x0));
    }
    a.validate_nonnegative()?;
    cbar.validate_nonnegative()?;
    let product = a
        .product_one_plus()
        .ok_or(ProcessError::DivergentSchedule("a"))?;
    // The residual at most doubles each compensator draw.
    let residual_factor = match residual {
        ResidualKind::None => 1.0,
        ResidualKind::TwoPoint => 2.0,
    };
    let total_c = cbar
        .total_sum()
        .ok_or(ProcessError::DivergentSchedule("cbar"))?
        * residual_factor;
    Ok(ProcessFamily {
        kind: FamilyKind::GeneralRs {
            a,
            cbar,
            residual,
            x0,
        },
        certificate: Certificate {
            k: (x0 + 1.0).max(2.0),
            initial_mean: x0,
            rho: Some(BoundednessModulus::constant(product.max(1.0))?),
            sigma: Some(BoundednessModulus::constant(total_c.max(1.0))?),
            steps: None,
            divergence: None,
            drift: None,
        },
        flags: HypothesisFlags {
            is_supermartingale: false,
            is_rs: true,
            is_rm: false,
            is_deterministic: false,
        },
    })
}

/// The nonstochastic recursion `x_{n+1} = (1+α_n)x_n - β_n + γ_n`, clamped
/// below at zero with clamping events recorded (see
/// [`ProcessFamily::clamp_events`]). The trace is independent of the seed.
pub fn deterministic_rs(
    alpha: StepSchedule,
    beta: StepSchedule,
    gamma: StepSchedule,
    x0: f64,
) -> Result<ProcessFamily, ProcessError> {
    if !x0.is_finite() || x0 < 0.0 {
        return Err(ProcessError::BadInitialValue(x0));
    }
    alpha.validate_nonnegative()?;
    beta.validate_nonnegative()?;
    gamma.validate_nonnegative()?;
    let product = alpha
        .product_one_plus()
        .ok_or(ProcessError::DivergentSchedule("alpha"))?;
    let total_gamma = gamma
        .total_sum()
        .ok_or(ProcessError::DivergentSchedule("gamma"))?;
    Ok(ProcessFamily {
        kind: FamilyKind::DeterministicRs {
            alpha,
            beta,
            gamma,
            x0,
        },
        certificate: Certificate {
            k: x0 + 1.0,
            initial_mean: x0,
            rho: Some(BoundednessModulus::constant(product.max(1.0))?),
            sigma: Some(BoundednessModulus::constant(total_gamma.max(1.0))?),
            steps: None,
            divergence: None,
            drift: None,
        },
        flags: HypothesisFlags {
            is_supermartingale: false,
            is_rs: true,
            is_rm: false,
            is_deterministic: true,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fair_double_or_half() -> ProcessFamily {
        multiplicative_supermartingale(1.0, &[(0.5, 0.5), (1.5, 0.5)]).unwrap()
    }

    #[test]
    fn multiplicative_validation() {
        assert!(multiplicative_supermartingale(1.0, &[(-0.5, 1.0)]).is_err());
        assert!(multiplicative_supermartingale(1.0, &[(2.0, 1.0)]).is_err());
        assert!(multiplicative_supermartingale(1.0, &[(0.5, 0.3), (1.5, 0.3)]).is_err());
        assert!(multiplicative_supermartingale(-1.0, &[(1.0, 1.0)]).is_err());
        let fam = fair_double_or_half();
        assert_eq!(fam.certificate.k, 2.0);
        assert_eq!(fam.certificate.initial_mean, 1.0);
        assert!(fam.flags.is_supermartingale);
    }

    #[test]
    fn multiplicative_degenerate_factors() {
        let constant = multiplicative_supermartingale(3.0, &[(1.0, 1.0)]).unwrap();
        let t = constant.sample(1, 50);
        assert!(t.x.iter().all(|&v| v == 3.0));

        let absorbing = multiplicative_supermartingale(1.0, &[(0.0, 1.0)]).unwrap();
        let t = absorbing.sample(1, 50);
        assert_eq!(t.x[0], 1.0);
        assert!(t.x[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn multiplicative_sample_mean_stays_near_one() {
        // Martingale mean check: E[U_100] = 1 within 3 standard errors.
        let fam = fair_double_or_half();
        let n_paths = 2000u64;
        let horizon = 100;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n_paths {
            let seed = crate::processes::SplitMix64::for_path(42, i).next_u64();
            let last = *fam.sample(seed, horizon).x.last().unwrap();
            sum += last;
            sum_sq += last * last;
        }
        let mean = sum / n_paths as f64;
        let var = (sum_sq / n_paths as f64 - mean * mean).max(0.0);
        let stderr = (var / n_paths as f64).sqrt();
        assert!(
            (mean - 1.0).abs() <= 3.0 * stderr,
            "mean {mean}, stderr {stderr}"
        );
    }

    #[test]
    fn sgd_noiseless_contracts_exactly() {
        let fam = sgd_quadratic(2.0, StepSchedule::Constant { u: 0.5 }, 0.0).unwrap();
        let t = fam.sample(9, 20);
        for (n, &xv) in t.x.iter().enumerate() {
            let expected = 4.0 * 0.25f64.powi(n as i32);
            assert!((xv - expected).abs() <= 1e-12 * expected.max(1e-300));
        }
        // V_n = (2 - u) X_n.
        let v = t.v.as_ref().unwrap();
        for n in 0..t.x.len() {
            assert!((v[n] - 1.5 * t.x[n]).abs() < 1e-15);
        }
    }

    #[test]
    fn sgd_rejects_bad_inputs() {
        assert!(sgd_quadratic(1.0, StepSchedule::Constant { u: 1.5 }, 1.0).is_err());
        assert!(sgd_quadratic(1.0, StepSchedule::Constant { u: 0.5 }, -1.0).is_err());
        assert!(sgd_quadratic(
            1.0,
            StepSchedule::Explicit { values: vec![0.5, 1.2] },
            0.0
        )
        .is_err());
    }

    #[test]
    fn sgd_sigma_certificate_requires_square_summable_steps() {
        // Noisy constant steps: sum C_i = sum u² s² diverges.
        let fam = sgd_quadratic(2.0, StepSchedule::Constant { u: 0.5 }, 1.0).unwrap();
        assert!(fam.certificate.sigma.is_none());
        // Harmonic steps are square-summable: σ ≡ max(1, s²·π²/6).
        let fam = sgd_quadratic(1.0, StepSchedule::Harmonic { scale: 1.0 }, 1.0).unwrap();
        let sigma = fam.certificate.sigma.unwrap();
        let l = crate::moduli::Confidence::new(0.3).unwrap();
        assert!((sigma.eval(l) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-12);
        // Noiseless: σ ≡ 1 regardless of the steps.
        let fam = sgd_quadratic(1.0, StepSchedule::Constant { u: 0.5 }, 0.0).unwrap();
        assert_eq!(fam.certificate.sigma.unwrap().eval(l), 1.0);
    }

    #[test]
    fn sgd_conditional_drift_identity_at_fixed_step() {
        // With two-point noise, E[X_{n+1} | F_n] = (1-u_n)² X_n + u_n² s²
        // exactly; the empirical mean of the residual at n = 5 is zero to
        // within 3 standard errors.
        let fam = sgd_quadratic(1.0, StepSchedule::Harmonic { scale: 1.0 }, 1.0).unwrap();
        let n = 5usize;
        let u_n = 1.0 / (n as f64 + 1.0);
        let n_paths = 2000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n_paths {
            let seed = crate::processes::SplitMix64::for_path(7, i).next_u64();
            let t = fam.sample(seed, (n + 1) as u64);
            let predicted = (1.0 - u_n) * (1.0 - u_n) * t.x[n] + u_n * u_n;
            let resid = t.x[n + 1] - predicted;
            sum += resid;
            sum_sq += resid * resid;
        }
        let mean = sum / n_paths as f64;
        let var = (sum_sq / n_paths as f64 - mean * mean).max(0.0);
        let stderr = (var / n_paths as f64).sqrt();
        assert!(mean.abs() <= 3.0 * stderr.max(1e-12), "mean {mean}, stderr {stderr}");
    }

    #[test]
    fn general_rs_certificates_and_paths() {
        // a ≡ 0, cbar ≡ 0, no noise: constant path.
        let fam = general_rs(
            StepSchedule::Constant { u: 0.0 },
            StepSchedule::Constant { u: 0.0 },
            ResidualKind::None,
            0.7,
        )
        .unwrap();
        let t = fam.sample(11, 30);
        assert!(t.x.iter().all(|&v| v == 0.7));

        // a_n = 2^{-n-2}: rho = prod(1 + a_n) < e^{1/2}.
        let fam = general_rs(
            StepSchedule::Geometric { scale: 0.25, ratio: 0.5 },
            StepSchedule::Geometric { scale: 0.5, ratio: 0.5 },
            ResidualKind::TwoPoint,
            1.0,
        )
        .unwrap();
        let l = crate::moduli::Confidence::new(0.3).unwrap();
        let rho = fam.certificate.rho.as_ref().unwrap().eval(l);
        assert!(rho < 1.649);
        assert!(rho > 1.58);
        // cbar sums to 1; the two-point residual doubles the worst case.
        let sigma = fam.certificate.sigma.as_ref().unwrap().eval(l);
        assert_eq!(sigma, 2.0);

        // Divergent schedules are rejected.
        assert!(general_rs(
            StepSchedule::Harmonic { scale: 1.0 },
            StepSchedule::Constant { u: 0.0 },
            ResidualKind::None,
            1.0
        )
        .is_err());
    }

    #[test]
    fn deterministic_rs_constant_and_clamped() {
        let zero = StepSchedule::Constant { u: 0.0 };
        let fam = deterministic_rs(zero.clone(), zero.clone(), zero.clone(), 0.3).unwrap();
        let t = fam.sample(0, 40);
        assert!(t.x.iter().all(|&v| v == 0.3));
        assert!(fam.clamp_events(40).is_empty());
        assert!(fam.flags.is_deterministic);

        // Oversized β forces clamping at every step; the iterate pins to 0
        // once drained and the b-track records the effective values.
        let fam = deterministic_rs(
            zero.clone(),
            StepSchedule::Constant { u: 5.0 },
            zero.clone(),
            1.0,
        )
        .unwrap();
        let t = fam.sample(0, 5);
        assert_eq!(t.x[1], 0.0);
        assert!(t.x.iter().all(|&v| v >= 0.0));
        assert_eq!(fam.clamp_events(5).len(), 6);
        let b = t.b.unwrap();
        assert_eq!(b[0], 1.0);
        assert_eq!(b[1], 0.0);
    }

    #[test]
    fn deterministic_rs_ignores_seed() {
        let fam = deterministic_rs(
            StepSchedule::Geometric { scale: 0.25, ratio: 0.5 },
            StepSchedule::Constant { u: 0.0 },
            StepSchedule::Geometric { scale: 0.25, ratio: 0.5 },
            0.5,
        )
        .unwrap();
        assert_eq!(fam.sample(1, 64), fam.sample(999, 64));
    }

    #[test]
    fn descriptor_serializes_kind_and_certificate() {
        let fam = fair_double_or_half();
        let d = fam.descriptor();
        assert_eq!(d["family"]["kind"], "multiplicative_supermartingale");
        assert_eq!(d["certificate"]["k"], 2.0);
        assert_eq!(d["flags"]["is_supermartingale"], true);
    }
}

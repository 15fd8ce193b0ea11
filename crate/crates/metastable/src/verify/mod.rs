//! Empirical certification of bounds.
//!
//! Each procedure here ties one kind of theoretical bound to a seeded
//! Monte-Carlo experiment and reports a verdict:
//!
//! * pass/fail comparisons always use the conservative side of the
//!   confidence interval, so statistical noise cannot fail a true bound;
//! * `fail` requires the interval to violate the bound even on its
//!   favorable side (planted-failure fixtures exercise this);
//! * saturated metastable bounds and windows that outgrow the horizon give
//!   `inconclusive`, never `fail`.
//!
//! Reports carry their full reproduction parameters and serialize to JSON
//! and to one-line CSV summaries.

mod report;

pub use report::{BoundValue, Repro, Verdict, VerificationReport};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::estimators::{
    count_crossings, mc_vector, oscillation_event, sup_over_horizon, Estimate, EstimatorError,
    IntervalScheme, McSettings, Window, CI_Z,
};
use crate::moduli::{
    Accuracy, BoundednessModulus, Confidence, Counterfunction, LearnableRate, LiminfModulus,
    MetastableBound, ModuliError,
};
use crate::processes::ProcessFamily;

/// Errors from verification procedures.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("family does not expose the {0} track")]
    MissingTrack(&'static str),

    #[error("family certificate does not assert `{0}`")]
    HypothesisNotCertified(&'static str),

    #[error("horizon must be at least 1")]
    DegenerateHorizon,

    #[error("partition needs p >= 1 and M > 0")]
    BadPartition,

    #[error(transparent)]
    Estimator(#[from] EstimatorError),

    #[error(transparent)]
    Moduli(#[from] ModuliError),
}

fn repro(settings: &McSettings, parameters: BTreeMap<String, serde_json::Value>) -> Repro {
    Repro {
        seed: settings.seed,
        n_paths: settings.n_paths,
        horizon: settings.horizon,
        parameters,
    }
}

/// Verdict for a claim `P(event) < target`: pass when even the upper
/// confidence limit stays below, fail when even the lower one does not,
/// inconclusive otherwise (ties included).
fn verdict_probability_below(estimate: &Estimate, target: f64) -> Verdict {
    if estimate.ci_high < target {
        Verdict::Pass
    } else if estimate.ci_low > target {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

/// Checks `P(sup_{n <= horizon} |X_n| >= rho(λ)) < λ`.
///
/// The horizon-limited supremum only lower-bounds the limiting one, so the
/// report is labelled with its horizon and notes the half-horizon estimate
/// as a monotonicity guard.
pub fn verify_boundedness(
    family: &ProcessFamily,
    rho: &BoundednessModulus,
    lambda: Confidence,
    settings: &McSettings,
) -> Result<VerificationReport, VerifyError> {
    if settings.horizon == 0 {
        return Err(VerifyError::DegenerateHorizon);
    }
    let threshold = rho.eval(lambda);
    let half = settings.horizon / 2;
    let hits = mc_vector(family, settings, |t| {
        let full = sup_over_horizon(&t.x).expect("nonempty trace") >= threshold;
        let half_sup = t.x[..=half as usize]
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        (full, half_sup >= threshold)
    })?;
    let successes = hits.iter().filter(|h| h.0).count() as u64;
    let half_successes = hits.iter().filter(|h| h.1).count() as u64;
    let estimate = Estimate::wilson(successes, settings.n_paths, CI_Z);
    let verdict = verdict_probability_below(&estimate, lambda.value());

    let mut parameters = BTreeMap::new();
    parameters.insert("lambda".into(), lambda.value().into());
    parameters.insert("threshold".into(), threshold.into());
    parameters.insert("rho".into(), serde_json::to_value(rho.provenance()).unwrap());
    let half_point = half_successes as f64 / settings.n_paths as f64;
    Ok(VerificationReport {
        claim: "boundedness".into(),
        bound: BoundValue::Real(lambda.value()),
        estimate: Some(estimate),
        verdict,
        repro: repro(settings, parameters),
        notes: vec![format!(
            "finite-horizon surrogate: sup over n <= {}; at half horizon the exceedance \
             frequency is {half_point}",
            settings.horizon
        )],
        details: BTreeMap::new(),
    })
}

/// Checks the learnable-rate property of `phi` on one interval scheme:
/// some window of index `n <= phi(λ, ε)` must have oscillation probability
/// conclusively below `λ`, and the number of windows conclusively at or
/// above `λ` must stay within `phi(λ, ε)`.
pub fn verify_learnable(
    family: &ProcessFamily,
    phi: &LearnableRate,
    lambda: Confidence,
    eps: Accuracy,
    scheme: &IntervalScheme,
    settings: &McSettings,
) -> Result<VerificationReport, VerifyError> {
    if scheme.is_empty() {
        return Err(VerifyError::Estimator(EstimatorError::EmptyScheme));
    }
    let windows = scheme.windows();
    if let Some(w) = windows.iter().find(|w| w.hi > settings.horizon) {
        return Err(VerifyError::Estimator(EstimatorError::WindowOutOfRange {
            lo: w.lo,
            hi: w.hi,
            len: settings.horizon as usize + 1,
        }));
    }
    let phi_val = phi.eval(lambda, eps);

    let per_path = mc_vector(family, settings, |t| {
        windows
            .iter()
            .map(|&w| oscillation_event(&t.x, w, eps.value()).expect("window checked"))
            .collect::<Vec<bool>>()
    })?;
    let mut counts = vec![0u64; windows.len()];
    for path in &per_path {
        for (c, &hit) in counts.iter_mut().zip(path) {
            *c += hit as u64;
        }
    }
    let estimates: Vec<Estimate> = counts
        .iter()
        .map(|&c| Estimate::wilson(c, settings.n_paths, CI_Z))
        .collect();

    let scan_limit = if phi_val >= (windows.len() - 1) as f64 {
        windows.len() - 1
    } else {
        phi_val.floor() as usize
    };
    let pass_index = estimates[..=scan_limit]
        .iter()
        .position(|e| e.ci_high < lambda.value());
    let bad_count = estimates
        .iter()
        .filter(|e| e.ci_low >= lambda.value())
        .count();

    let verdict = if (bad_count as f64) > phi_val {
        Verdict::Fail
    } else if pass_index.is_some() {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    let reported = pass_index
        .map(|i| estimates[i])
        .unwrap_or_else(|| {
            *estimates
                .iter()
                .min_by(|a, b| a.ci_high.total_cmp(&b.ci_high))
                .expect("nonempty scheme")
        });

    let mut parameters = BTreeMap::new();
    parameters.insert("lambda".into(), lambda.value().into());
    parameters.insert("eps".into(), eps.value().into());
    parameters.insert("scheme".into(), serde_json::to_value(scheme).unwrap());
    parameters.insert("phi".into(), serde_json::to_value(phi.provenance()).unwrap());
    let mut details = BTreeMap::new();
    details.insert("phi_value".into(), phi_val.into());
    details.insert("pass_index".into(), serde_json::to_value(pass_index).unwrap());
    details.insert("bad_window_count".into(), (bad_count as u64).into());
    details.insert("window_count".into(), (windows.len() as u64).into());
    details.insert(
        "window_points".into(),
        serde_json::to_value(estimates.iter().map(|e| e.point).collect::<Vec<f64>>()).unwrap(),
    );
    Ok(VerificationReport {
        claim: "learnable".into(),
        bound: BoundValue::Real(phi_val),
        estimate: Some(reported),
        verdict,
        repro: repro(settings, parameters),
        notes: Vec::new(),
        details,
    })
}

/// Checks `P(∀ k ∈ [n; n + Ψ(λ, ε, n)] : V_k >= ε) < λ` at a given start
/// index, against the family's V track.
pub fn verify_liminf(
    family: &ProcessFamily,
    psi: &LiminfModulus,
    lambda: Confidence,
    eps: Accuracy,
    start_n: u64,
    settings: &McSettings,
) -> Result<VerificationReport, VerifyError> {
    if settings.horizon == 0 {
        return Err(VerifyError::DegenerateHorizon);
    }
    let probe = family.sample(0, 0);
    if probe.v.is_none() {
        return Err(VerifyError::MissingTrack("V"));
    }

    let mut parameters = BTreeMap::new();
    parameters.insert("lambda".into(), lambda.value().into());
    parameters.insert("eps".into(), eps.value().into());
    parameters.insert("start_n".into(), start_n.into());
    parameters.insert("psi".into(), serde_json::to_value(psi.provenance()).unwrap());

    let inconclusive = |note: String, bound: BoundValue, params: BTreeMap<String, serde_json::Value>| {
        VerificationReport {
            claim: "liminf".into(),
            bound,
            estimate: None,
            verdict: Verdict::Inconclusive,
            repro: repro(settings, params),
            notes: vec![note],
            details: BTreeMap::new(),
        }
    };

    let width = match psi.eval(lambda, eps, start_n) {
        Ok(w) => w,
        Err(e) => {
            return Ok(inconclusive(
                format!("liminf modulus not evaluable: {e}"),
                BoundValue::Saturated(u64::MAX),
                parameters,
            ))
        }
    };
    let end = start_n.saturating_add(width);
    if end > settings.horizon {
        return Ok(inconclusive(
            format!(
                "window [{start_n}; {end}] needs horizon >= {end}, have {}",
                settings.horizon
            ),
            BoundValue::Index(width),
            parameters,
        ));
    }

    let window = Window { lo: start_n, hi: end };
    let hits = mc_vector(family, settings, |t| {
        let v = t.v.as_ref().expect("V track checked");
        v[window.lo as usize..=window.hi as usize]
            .iter()
            .all(|&x| x >= eps.value())
    })?;
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    let estimate = Estimate::wilson(successes, settings.n_paths, CI_Z);
    let verdict = verdict_probability_below(&estimate, lambda.value());
    Ok(VerificationReport {
        claim: "liminf".into(),
        bound: BoundValue::Index(width),
        estimate: Some(estimate),
        verdict,
        repro: repro(settings, parameters),
        notes: Vec::new(),
        details: BTreeMap::new(),
    })
}

/// Checks the metastable search bound: scanning the candidate window
/// starts `0, f̃(0), f̃²(0), ...` of the bound's iteration map, some
/// candidate `n` must give `P(∃ k ∈ [n; n + g(n)] : X_k >= ε)`
/// conclusively below `λ`.
///
/// A witness makes the claim pass outright. With no witness, a saturated
/// bound or candidates truncated by the horizon give `inconclusive`;
/// `fail` needs every candidate of a fully-scanned finite bound to violate
/// conclusively.
pub fn verify_metastable(
    family: &ProcessFamily,
    bound: &MetastableBound,
    window_g: &Counterfunction,
    lambda: Confidence,
    eps: Accuracy,
    settings: &McSettings,
) -> Result<VerificationReport, VerifyError> {
    if settings.horizon == 0 {
        return Err(VerifyError::DegenerateHorizon);
    }
    const MAX_CANDIDATES: usize = 64;
    let scan = bound
        .scan
        .candidates(bound.iterations, settings.horizon, MAX_CANDIDATES);
    let candidates: Vec<(u64, Window)> = scan
        .starts
        .iter()
        .map(|&n| (n, Window { lo: n, hi: n.saturating_add(window_g.apply(n)) }))
        .filter(|(_, w)| w.hi <= settings.horizon)
        .collect();
    let truncated = !scan.complete || candidates.len() < scan.starts.len();

    let mut parameters = BTreeMap::new();
    parameters.insert("lambda".into(), lambda.value().into());
    parameters.insert("eps".into(), eps.value().into());
    parameters.insert("g".into(), window_g.describe().into());
    parameters.insert("bound".into(), serde_json::to_value(bound.provenance()).unwrap());

    if candidates.is_empty() {
        return Ok(VerificationReport {
            claim: "metastable".into(),
            bound: bound.bound.into(),
            estimate: None,
            verdict: Verdict::Inconclusive,
            repro: repro(settings, parameters),
            notes: vec!["no candidate window fits the horizon".into()],
            details: BTreeMap::new(),
        });
    }

    let per_path = mc_vector(family, settings, |t| {
        candidates
            .iter()
            .map(|&(_, w)| {
                t.x[w.lo as usize..=w.hi as usize]
                    .iter()
                    .any(|&x| x >= eps.value())
            })
            .collect::<Vec<bool>>()
    })?;
    let mut counts = vec![0u64; candidates.len()];
    for path in &per_path {
        for (c, &hit) in counts.iter_mut().zip(path) {
            *c += hit as u64;
        }
    }
    let estimates: Vec<Estimate> = counts
        .iter()
        .map(|&c| Estimate::wilson(c, settings.n_paths, CI_Z))
        .collect();

    let pass_at = estimates.iter().position(|e| e.ci_high < lambda.value());
    let all_violate = estimates.iter().all(|e| e.ci_low > lambda.value());
    let (verdict, note) = match pass_at {
        Some(_) => (Verdict::Pass, None),
        None if truncated => (
            Verdict::Inconclusive,
            Some("bound saturated or candidates truncated by the horizon".to_owned()),
        ),
        None if all_violate => (Verdict::Fail, None),
        None => (Verdict::Inconclusive, None),
    };
    let reported = pass_at
        .map(|i| estimates[i])
        .unwrap_or_else(|| {
            *estimates
                .iter()
                .min_by(|a, b| a.ci_high.total_cmp(&b.ci_high))
                .expect("nonempty candidates")
        });

    let mut details = BTreeMap::new();
    details.insert(
        "candidates".into(),
        serde_json::to_value(candidates.iter().map(|c| c.0).collect::<Vec<u64>>()).unwrap(),
    );
    details.insert(
        "candidate_points".into(),
        serde_json::to_value(estimates.iter().map(|e| e.point).collect::<Vec<f64>>()).unwrap(),
    );
    details.insert(
        "pass_candidate".into(),
        serde_json::to_value(pass_at.map(|i| candidates[i].0)).unwrap(),
    );
    Ok(VerificationReport {
        claim: "metastable".into(),
        bound: bound.bound.into(),
        estimate: Some(reported),
        verdict,
        repro: repro(settings, parameters),
        notes: note.into_iter().collect(),
        details,
    })
}

/// Checks the crossing inequality for a certified nonnegative
/// supermartingale: partitioning `[0, M]` into `p` equal intervals, every
/// interval's expected crossing count up to the horizon must stay within
/// `2p·E[U_0]/M + 1`.
pub fn verify_crossing_inequality(
    family: &ProcessFamily,
    m: f64,
    p: u64,
    settings: &McSettings,
) -> Result<VerificationReport, VerifyError> {
    if !family.flags.is_supermartingale {
        return Err(VerifyError::HypothesisNotCertified("is_supermartingale"));
    }
    if p == 0 || !(m > 0.0) {
        return Err(VerifyError::BadPartition);
    }
    let e_u0 = family.certificate.initial_mean;
    let bound = 2.0 * p as f64 * e_u0 / m + 1.0;
    let intervals: Vec<(f64, f64)> = (0..p)
        .map(|j| (j as f64 * m / p as f64, (j + 1) as f64 * m / p as f64))
        .collect();

    let per_path = mc_vector(family, settings, |t| {
        intervals
            .iter()
            .map(|&(a, b)| {
                count_crossings(&t.x, a, b).expect("validated interval").crossings as f64
            })
            .collect::<Vec<f64>>()
    })?;
    let estimates: Vec<Estimate> = (0..intervals.len())
        .map(|j| {
            let samples: Vec<f64> = per_path.iter().map(|row| row[j]).collect();
            Estimate::normal_mean(&samples, CI_Z)
        })
        .collect();

    let worst = estimates
        .iter()
        .max_by(|a, b| a.ci_high.total_cmp(&b.ci_high))
        .copied()
        .expect("p >= 1");
    let verdict = if worst.ci_high <= bound {
        Verdict::Pass
    } else if estimates.iter().any(|e| e.ci_low > bound) {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };

    let mut parameters = BTreeMap::new();
    parameters.insert("m".into(), m.into());
    parameters.insert("p".into(), p.into());
    parameters.insert("e_u0".into(), e_u0.into());
    let mut details = BTreeMap::new();
    details.insert(
        "interval_means".into(),
        serde_json::to_value(estimates.iter().map(|e| e.point).collect::<Vec<f64>>()).unwrap(),
    );
    Ok(VerificationReport {
        claim: "crossing".into(),
        bound: BoundValue::Real(bound),
        estimate: Some(worst),
        verdict,
        repro: repro(settings, parameters),
        notes: Vec::new(),
        details,
    })
}

/// Checks `P(sum_i B_i >= chi(λ)) < λ` against the family's B track,
/// summed over the full horizon.
pub fn verify_bsum(
    family: &ProcessFamily,
    chi: &BoundednessModulus,
    lambda: Confidence,
    settings: &McSettings,
) -> Result<VerificationReport, VerifyError> {
    if settings.horizon == 0 {
        return Err(VerifyError::DegenerateHorizon);
    }
    let probe = family.sample(0, 0);
    if probe.b.is_none() {
        return Err(VerifyError::MissingTrack("B"));
    }
    let threshold = chi.eval(lambda);
    let hits = mc_vector(family, settings, |t| {
        t.b.as_ref().expect("B track checked").iter().sum::<f64>() >= threshold
    })?;
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    let estimate = Estimate::wilson(successes, settings.n_paths, CI_Z);
    let verdict = verdict_probability_below(&estimate, lambda.value());

    let mut parameters = BTreeMap::new();
    parameters.insert("lambda".into(), lambda.value().into());
    parameters.insert("threshold".into(), threshold.into());
    parameters.insert("chi".into(), serde_json::to_value(chi.provenance()).unwrap());
    Ok(VerificationReport {
        claim: "bsum".into(),
        bound: BoundValue::Real(lambda.value()),
        estimate: Some(estimate),
        verdict,
        repro: repro(settings, parameters),
        notes: Vec::new(),
        details: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::{
        liminf_modulus, rm_metastable, rs_bsum_boundedness, rs_learnable_pipeline,
        rs_x_boundedness, supermartingale_learnable, RateOfDivergence,
    };
    use crate::processes::{
        deterministic_rs, multiplicative_supermartingale, sgd_quadratic, StepSchedule,
    };

    fn conf(l: f64) -> Confidence {
        Confidence::new(l).unwrap()
    }
    fn acc(e: f64) -> Accuracy {
        Accuracy::new(e).unwrap()
    }
    fn martingale() -> ProcessFamily {
        multiplicative_supermartingale(1.0, &[(0.5, 0.5), (1.5, 0.5)]).unwrap()
    }
    fn noiseless_sgd() -> ProcessFamily {
        sgd_quadratic(1.0, StepSchedule::Constant { u: 0.5 }, 0.0).unwrap()
    }

    #[test]
    fn boundedness_trivially_passes_for_constant_process() {
        let zero = StepSchedule::Constant { u: 0.0 };
        let fam = deterministic_rs(zero.clone(), zero.clone(), zero, 0.5).unwrap();
        let rho = BoundednessModulus::constant(1.0).unwrap();
        let s = McSettings::new(100, 50, 1);
        let r = verify_boundedness(&fam, &rho, conf(0.25), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.estimate.unwrap().point, 0.0);
    }

    #[test]
    fn boundedness_fails_for_planted_false_modulus() {
        let fam = martingale();
        let rho = BoundednessModulus::constant(0.5).unwrap();
        let s = McSettings::new(500, 100, 2);
        let r = verify_boundedness(&fam, &rho, conf(0.25), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.estimate.unwrap().point, 1.0);
    }

    #[test]
    fn boundedness_passes_under_ville_modulus() {
        let fam = martingale();
        let rho = BoundednessModulus::ville(fam.certificate.k).unwrap();
        let s = McSettings::new(2000, 1000, 42);
        let r = verify_boundedness(&fam, &rho, conf(0.25), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(verify_boundedness(&fam, &rho, conf(0.25), &McSettings::new(10, 0, 1)).is_err());
    }

    #[test]
    fn learnable_passes_on_constant_process_at_first_window() {
        let zero = StepSchedule::Constant { u: 0.0 };
        let fam = deterministic_rs(zero.clone(), zero.clone(), zero, 0.5).unwrap();
        let phi = LearnableRate::constant(3.0).unwrap();
        let scheme = IntervalScheme::dyadic(64).unwrap();
        let s = McSettings::new(50, 64, 3);
        let r = verify_learnable(&fam, &phi, conf(0.25), acc(0.25), &scheme, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.details["pass_index"], 0);
        assert_eq!(r.details["bad_window_count"], 0);
    }

    #[test]
    fn learnable_larger_rate_never_passes_later() {
        let fam = noiseless_sgd();
        let phi = rs_learnable_pipeline(
            fam.certificate.k,
            fam.certificate.rho.as_ref().unwrap(),
            fam.certificate.sigma.as_ref().unwrap(),
        )
        .unwrap();
        let bigger = crate::moduli::sum_learnable(&phi, &phi);
        let scheme = IntervalScheme::dyadic(256).unwrap();
        let s = McSettings::new(200, 256, 5);
        let a = verify_learnable(&fam, &phi, conf(0.25), acc(0.25), &scheme, &s).unwrap();
        let b = verify_learnable(&fam, &bigger, conf(0.25), acc(0.25), &scheme, &s).unwrap();
        assert_eq!(a.verdict, Verdict::Pass);
        assert_eq!(b.verdict, Verdict::Pass);
        assert_eq!(a.details["pass_index"], b.details["pass_index"]);
    }

    #[test]
    fn learnable_rejects_scheme_beyond_horizon() {
        let fam = noiseless_sgd();
        let phi = LearnableRate::constant(3.0).unwrap();
        let scheme = IntervalScheme::dyadic(1024).unwrap();
        let s = McSettings::new(50, 64, 3);
        assert!(verify_learnable(&fam, &phi, conf(0.25), acc(0.25), &scheme, &s).is_err());
    }

    #[test]
    fn liminf_passes_on_noiseless_decay_and_fails_on_planted_zero() {
        let fam = noiseless_sgd();
        let chi = rs_bsum_boundedness(
            fam.certificate.k,
            fam.certificate.rho.as_ref().unwrap(),
            fam.certificate.sigma.as_ref().unwrap(),
        )
        .unwrap();
        let psi = liminf_modulus(&chi, fam.certificate.divergence.as_ref().unwrap());
        let s = McSettings::new(100, 4096, 7);
        let r = verify_liminf(&fam, &psi, conf(0.25), acc(0.25), 0, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        // Φ ≡ 0 with V_0 = 1.5 >= ε surely: the one-point window fails.
        let zero = LiminfModulus::constant(0);
        let r = verify_liminf(&fam, &zero, conf(0.25), acc(0.25), 0, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn liminf_reports_required_horizon_when_window_overflows() {
        let fam = noiseless_sgd();
        let psi = LiminfModulus::constant(1_000_000);
        let s = McSettings::new(50, 128, 7);
        let r = verify_liminf(&fam, &psi, conf(0.25), acc(0.25), 0, &s).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.notes[0].contains("horizon"));
    }

    #[test]
    fn liminf_requires_v_track() {
        let fam = martingale();
        let psi = LiminfModulus::constant(0);
        let s = McSettings::new(50, 128, 7);
        assert!(matches!(
            verify_liminf(&fam, &psi, conf(0.25), acc(0.25), 0, &s),
            Err(VerifyError::MissingTrack("V"))
        ));
    }

    #[test]
    fn metastable_passes_on_decaying_process() {
        let fam = noiseless_sgd();
        let cert = &fam.certificate;
        let phi = rs_learnable_pipeline(
            cert.k,
            cert.rho.as_ref().unwrap(),
            cert.sigma.as_ref().unwrap(),
        )
        .unwrap();
        let chi = rs_bsum_boundedness(
            cert.k,
            cert.rho.as_ref().unwrap(),
            cert.sigma.as_ref().unwrap(),
        )
        .unwrap();
        let tau = rs_x_boundedness(
            cert.k,
            cert.rho.as_ref().unwrap(),
            cert.sigma.as_ref().unwrap(),
        )
        .unwrap();
        let phi_v = liminf_modulus(&chi, cert.divergence.as_ref().unwrap());
        let psi = crate::moduli::liminf_transfer(&phi_v, cert.drift.as_ref().unwrap(), &tau);
        let g = Counterfunction::identity();
        let bound = rm_metastable(&phi, &psi, conf(0.5), acc(0.5), &g).unwrap();
        let s = McSettings::new(100, 4096, 11);
        let r = verify_metastable(&fam, &bound, &g, conf(0.5), acc(0.5), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        // First candidate (n=0) is bad, the next passes.
        assert!(r.details["pass_candidate"].as_u64().unwrap() > 0);
    }

    #[test]
    fn metastable_saturated_bound_is_inconclusive_not_failed() {
        // A supermartingale rate forces an astronomically saturated bound,
        // and a tiny eps keeps every in-horizon candidate bad.
        let fam = martingale();
        let p = supermartingale_learnable(fam.certificate.k)
            .unwrap()
            .eval(conf(0.1), acc(0.1));
        let g = Counterfunction::successor();
        let bound = MetastableBound::from_fluctuation_bound(p, &g);
        assert!(bound.bound.is_saturated());
        let s = McSettings::new(200, 256, 13);
        let r = verify_metastable(&fam, &bound, &g, conf(0.1), acc(1e-9), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn metastable_passes_at_origin_for_zero_process() {
        let zero = StepSchedule::Constant { u: 0.0 };
        let fam = deterministic_rs(zero.clone(), zero.clone(), zero, 0.0).unwrap();
        let g = Counterfunction::identity();
        let bound = MetastableBound::from_fluctuation_bound(5.0, &g);
        let s = McSettings::new(50, 64, 1);
        let r = verify_metastable(&fam, &bound, &g, conf(0.25), acc(0.25), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.details["pass_candidate"], 0);
    }

    #[test]
    fn crossing_inequality_passes_on_martingale_and_constant() {
        let fam = martingale();
        let s = McSettings::new(2000, 1000, 42);
        let r = verify_crossing_inequality(&fam, 4.0, 8, &s).unwrap();
        assert_eq!(r.bound.to_string(), "5");
        assert_eq!(r.verdict, Verdict::Pass);

        let constant = multiplicative_supermartingale(1.0, &[(1.0, 1.0)]).unwrap();
        let r = verify_crossing_inequality(&constant, 4.0, 8, &McSettings::new(100, 100, 1))
            .unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.estimate.unwrap().point, 0.0);

        // p = 1 over a huge interval: never crossed.
        let r = verify_crossing_inequality(&fam, 1e6, 1, &McSettings::new(200, 200, 9)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        assert!(verify_crossing_inequality(&fam, 4.0, 0, &s).is_err());
        let sgd = noiseless_sgd();
        assert!(matches!(
            verify_crossing_inequality(&sgd, 4.0, 8, &s),
            Err(VerifyError::HypothesisNotCertified(_))
        ));
    }

    #[test]
    fn bsum_passes_on_zero_b_and_fails_on_planted_zero_modulus() {
        // general_rs has B ≡ 0.
        let fam = crate::processes::general_rs(
            StepSchedule::Constant { u: 0.0 },
            StepSchedule::Geometric { scale: 0.5, ratio: 0.5 },
            crate::processes::ResidualKind::TwoPoint,
            1.0,
        )
        .unwrap();
        let chi = BoundednessModulus::constant(1.0).unwrap();
        let s = McSettings::new(200, 100, 3);
        let r = verify_bsum(&fam, &chi, conf(0.25), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);

        // χ ≡ 0 on SGD: B_0 = u(2-u)X_0 > 0 surely.
        let sgd = noiseless_sgd();
        let zero = BoundednessModulus::constant(0.0).unwrap();
        let r = verify_bsum(&sgd, &zero, conf(0.25), &s).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);

        // The martingale family has no B track.
        assert!(matches!(
            verify_bsum(&martingale(), &chi, conf(0.25), &s),
            Err(VerifyError::MissingTrack("B"))
        ));
    }

    #[test]
    fn reports_are_reproducible_byte_for_byte() {
        let fam = martingale();
        let s = McSettings::new(500, 200, 21);
        let rho = BoundednessModulus::ville(2.0).unwrap();
        let a = verify_boundedness(&fam, &rho, conf(0.25), &s).unwrap();
        let b = verify_boundedness(&fam, &rho, conf(0.25), &s.with_threads(4)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.csv_row(), b.csv_row());
    }
}

//! Deterministic Monte-Carlo estimation.
//!
//! Per-path seeds are a pure function of `(base seed, path index)` and
//! aggregation always runs in path-index order after collection, so the
//! same settings give bit-identical estimates at any worker count.

use serde::Serialize;

use super::EstimatorError;
use crate::processes::{PathTrace, ProcessFamily, SplitMix64};

/// Confidence-interval construction used by an [`Estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Wilson,
    Hoeffding,
    Normal,
}

/// z-score of the Wilson and normal intervals: three-sigma (~99.73%).
pub const CI_Z: f64 = 3.0;

/// An empirical estimate with a confidence interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(rename = "n")]
    pub n_samples: u64,
    pub method: CiMethod,
}

impl Estimate {
    /// Wilson score interval for a Bernoulli proportion at `z` sigma.
    pub fn wilson(successes: u64, trials: u64, z: f64) -> Self {
        assert!(trials > 0, "wilson interval needs at least one trial");
        let n = trials as f64;
        let p_hat = successes.min(trials) as f64 / n;
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p_hat + z2 / (2.0 * n)) / denom;
        let radius = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            point: p_hat,
            ci_low: (center - radius).clamp(0.0, 1.0).min(p_hat),
            ci_high: (center + radius).clamp(0.0, 1.0).max(p_hat),
            n_samples: trials,
            method: CiMethod::Wilson,
        }
    }

    /// Hoeffding interval for a Bernoulli proportion at miss probability
    /// `delta`: half-width `sqrt(ln(2/δ) / (2n))`.
    pub fn hoeffding(successes: u64, trials: u64, delta: f64) -> Self {
        assert!(trials > 0, "hoeffding interval needs at least one trial");
        assert!(delta > 0.0 && delta < 1.0);
        let n = trials as f64;
        let p_hat = successes.min(trials) as f64 / n;
        let hw = ((2.0 / delta).ln() / (2.0 * n)).sqrt();
        Self {
            point: p_hat,
            ci_low: (p_hat - hw).max(0.0),
            ci_high: (p_hat + hw).min(1.0),
            n_samples: trials,
            method: CiMethod::Hoeffding,
        }
    }

    /// Normal-approximation interval for a mean, `z` sample standard errors
    /// wide, summed in slice order.
    pub fn normal_mean(samples: &[f64], z: f64) -> Self {
        assert!(!samples.is_empty(), "mean of an empty sample");
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (n - 1.0).max(1.0);
        let hw = z * (var / n).sqrt();
        Self {
            point: mean,
            ci_low: mean - hw,
            ci_high: mean + hw,
            n_samples: samples.len() as u64,
            method: CiMethod::Normal,
        }
    }

    pub fn halfwidth(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Settings for a Monte-Carlo run. `threads` only controls execution; it
/// never changes the result.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McSettings {
    pub n_paths: u64,
    pub horizon: u64,
    pub seed: u64,
    #[serde(skip)]
    pub threads: usize,
}

impl McSettings {
    pub fn new(n_paths: u64, horizon: u64, seed: u64) -> Self {
        Self {
            n_paths,
            horizon,
            seed,
            threads: 1,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    /// Derived seed for an auxiliary run (pilot sampling) that must not
    /// reuse the main path set.
    pub fn auxiliary_seed(&self) -> u64 {
        let mut rng = SplitMix64::new(self.seed ^ 0xA5A5_A5A5_5A5A_5A5A);
        rng.next_u64()
    }
}

/// Samples `n_paths` traces (seeds derived from the base seed by path
/// index) and maps each through `per_path`, returning results in path
/// order. Work is split across `threads` workers over disjoint index
/// chunks; the output is identical for any worker count.
pub fn mc_vector<T: Send>(
    family: &ProcessFamily,
    settings: &McSettings,
    per_path: impl Fn(&PathTrace) -> T + Sync,
) -> Result<Vec<T>, EstimatorError> {
    if settings.n_paths == 0 {
        return Err(EstimatorError::NoPaths);
    }
    let n = settings.n_paths as usize;
    let threads = settings.threads.max(1).min(n);
    let run_one = |i: usize| {
        let path_seed = SplitMix64::for_path(settings.seed, i as u64).next_u64();
        let trace = family.sample(path_seed, settings.horizon);
        per_path(&trace)
    };
    if threads == 1 {
        return Ok((0..n).map(run_one).collect());
    }
    let mut results: Vec<Option<T>> = Vec::with_capacity(n);
    results.resize_with(n, || None);
    let chunk = n.div_ceil(threads);
    std::thread::scope(|scope| {
        for (w, slot) in results.chunks_mut(chunk).enumerate() {
            let run_one = &run_one;
            scope.spawn(move || {
                for (off, out) in slot.iter_mut().enumerate() {
                    *out = Some(run_one(w * chunk + off));
                }
            });
        }
    });
    Ok(results.into_iter().map(|r| r.expect("worker filled slot")).collect())
}

/// Empirical probability of an event over sampled paths, with a Wilson
/// score interval at three sigma.
pub fn mc_probability(
    family: &ProcessFamily,
    event: impl Fn(&PathTrace) -> bool + Sync,
    settings: &McSettings,
) -> Result<Estimate, EstimatorError> {
    let hits = mc_vector(family, settings, |t| event(t))?;
    let successes = hits.iter().filter(|&&h| h).count() as u64;
    Ok(Estimate::wilson(successes, settings.n_paths, CI_Z))
}

/// Empirical mean of a statistic over sampled paths, with a
/// normal-approximation interval at three sample standard errors.
pub fn mc_expectation(
    family: &ProcessFamily,
    statistic: impl Fn(&PathTrace) -> f64 + Sync,
    settings: &McSettings,
) -> Result<Estimate, EstimatorError> {
    let values = mc_vector(family, settings, |t| statistic(t))?;
    Ok(Estimate::normal_mean(&values, CI_Z))
}

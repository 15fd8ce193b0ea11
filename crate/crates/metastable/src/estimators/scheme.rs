//! Increasing interval schemes.
//!
//! A scheme is a finite list of index windows
//! `a_0 < b_0 <= a_1 < b_1 <= ...` — the quantifier domain of learnable
//! rates. Universal quantification over all schemes is untestable, so
//! verification approximates it with dyadic windows, fixed-width tiles and
//! a greedy pilot-run scheme that front-loads the empirically worst
//! windows.

use serde::Serialize;

use super::mc::{mc_vector, McSettings};
use super::{oscillation_event, EstimatorError};
use crate::processes::ProcessFamily;

/// Inclusive index window `[lo; hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub lo: u64,
    pub hi: u64,
}

impl Window {
    pub fn len(&self) -> u64 {
        self.hi.saturating_sub(self.lo) + 1
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }
}

/// A validated finite interval scheme.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalScheme {
    kind: String,
    windows: Vec<Window>,
}

impl IntervalScheme {
    /// Validates `a_0 < b_0 <= a_1 < b_1 <= ...` and nonemptiness.
    pub fn from_windows(kind: &str, windows: Vec<Window>) -> Result<Self, EstimatorError> {
        if windows.is_empty() {
            return Err(EstimatorError::EmptyScheme);
        }
        for w in &windows {
            if w.lo >= w.hi {
                return Err(EstimatorError::BadScheme);
            }
        }
        for pair in windows.windows(2) {
            if pair[0].hi > pair[1].lo {
                return Err(EstimatorError::BadScheme);
            }
        }
        Ok(Self {
            kind: kind.to_owned(),
            windows,
        })
    }

    /// `[0; 1], [1; 2], [2; 4], [4; 8], ...` up to the max index.
    pub fn dyadic(max_index: u64) -> Result<Self, EstimatorError> {
        let mut windows = Vec::new();
        if max_index >= 1 {
            windows.push(Window { lo: 0, hi: 1 });
        }
        let mut k = 1u64;
        while k.saturating_mul(2) <= max_index {
            windows.push(Window { lo: k, hi: 2 * k });
            k *= 2;
        }
        Self::from_windows("dyadic", windows)
    }

    /// Consecutive tiles `[0; w], [w; 2w], ...` within the max index.
    pub fn tiled(width: u64, max_index: u64) -> Result<Self, EstimatorError> {
        if width == 0 {
            return Err(EstimatorError::BadScheme);
        }
        let mut windows = Vec::new();
        let mut lo = 0u64;
        while lo + width <= max_index {
            windows.push(Window { lo, hi: lo + width });
            lo += width;
        }
        Self::from_windows("tiled", windows)
    }

    /// Adversarial scheme: a pilot run scores candidate windows of the
    /// given widths by empirical oscillation probability at `eps`, then
    /// windows are picked greedily (highest score first, overlaps dropped)
    /// and the remaining index space is tiled so the scheme still covers
    /// the horizon. The pilot uses a seed derived from the main one, so it
    /// never reuses the verification path set.
    pub fn greedy_adversarial(
        family: &ProcessFamily,
        eps: f64,
        widths: &[u64],
        max_picked: usize,
        settings: &McSettings,
    ) -> Result<Self, EstimatorError> {
        let max_index = settings.horizon;
        let pilot = McSettings::new(
            settings.n_paths.clamp(1, 200),
            settings.horizon,
            settings.auxiliary_seed(),
        )
        .with_threads(settings.threads);

        let mut candidates: Vec<Window> = Vec::new();
        for &w in widths {
            if w == 0 {
                continue;
            }
            let mut lo = 0u64;
            while lo + w <= max_index {
                candidates.push(Window { lo, hi: lo + w });
                lo += w;
            }
        }
        if candidates.is_empty() {
            return Err(EstimatorError::BadScheme);
        }

        let per_path = mc_vector(family, &pilot, |t| {
            candidates
                .iter()
                .map(|&w| oscillation_event(&t.x, w, eps).unwrap_or(false))
                .collect::<Vec<bool>>()
        })?;
        let mut scores = vec![0u64; candidates.len()];
        for path in &per_path {
            for (s, &hit) in scores.iter_mut().zip(path) {
                *s += hit as u64;
            }
        }

        // Highest score first; ties resolve by position for determinism.
        let mut order: Vec<usize> = (0..candidates.len()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(scores[i]), candidates[i].lo, candidates[i].hi));
        let mut picked: Vec<Window> = Vec::new();
        for &i in &order {
            if picked.len() >= max_picked {
                break;
            }
            let cand = candidates[i];
            let disjoint = picked.iter().all(|p| cand.lo >= p.hi || cand.hi <= p.lo);
            if disjoint {
                picked.push(cand);
            }
        }
        picked.sort_by_key(|w| w.lo);

        // Fill the space after the last pick with tiles so late, stable
        // windows exist within the scheme.
        let fill = widths.iter().copied().filter(|&w| w > 0).min().unwrap_or(1);
        let mut windows = picked;
        let mut lo = windows.last().map(|w| w.hi).unwrap_or(0);
        while lo + fill <= max_index {
            windows.push(Window { lo, hi: lo + fill });
            lo += fill;
        }
        Self::from_windows("greedy_adversarial", windows)
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

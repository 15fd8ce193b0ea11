//! Verification reports.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::estimators::Estimate;
use crate::moduli::ExtendedIndex;

/// Outcome of a verification procedure.
///
/// `Pass` means the conservative side of the confidence interval respects
/// the bound; `Fail` means the estimate strictly violates it even on its
/// favorable side; everything else — statistical murk, saturated bounds,
/// windows that outgrow the horizon — is `Inconclusive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// The theoretical bound a report checked against.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BoundValue {
    Real(f64),
    Index(u64),
    Saturated(u64),
}

impl From<ExtendedIndex> for BoundValue {
    fn from(e: ExtendedIndex) -> Self {
        match e {
            ExtendedIndex::Finite(n) => BoundValue::Index(n),
            ExtendedIndex::Saturated(cap) => BoundValue::Saturated(cap),
        }
    }
}

impl std::fmt::Display for BoundValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundValue::Real(v) => write!(f, "{v}"),
            BoundValue::Index(n) => write!(f, "{n}"),
            BoundValue::Saturated(cap) => write!(f, "saturated@{cap}"),
        }
    }
}

/// Everything needed to reproduce a report. Worker-thread count is
/// deliberately absent: results do not depend on it.
#[derive(Debug, Clone, Serialize)]
pub struct Repro {
    pub seed: u64,
    pub n_paths: u64,
    pub horizon: u64,
    pub parameters: BTreeMap<String, serde_json::Value>,
}

/// Result of checking one theoretical bound against simulation.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub bound: BoundValue,
    pub estimate: Option<Estimate>,
    pub verdict: Verdict,
    pub repro: Repro,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl VerificationReport {
    pub fn with_claim(mut self, claim: &str) -> Self {
        self.claim = claim.to_owned();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// Fixed CSV column order, stable across runs and thread counts.
    pub fn csv_header() -> &'static str {
        "claim,bound,point,ci_low,ci_high,n_paths,horizon,seed,verdict"
    }

    pub fn csv_row(&self) -> String {
        let (point, lo, hi) = match &self.estimate {
            Some(e) => (e.point.to_string(), e.ci_low.to_string(), e.ci_high.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        format!(
            "{},{},{point},{lo},{hi},{},{},{},{}",
            self.claim, self.bound, self.repro.n_paths, self.repro.horizon, self.repro.seed,
            self.verdict
        )
    }
}

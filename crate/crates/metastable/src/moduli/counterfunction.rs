//! Counterfunctions and metastable iteration budgets.
//!
//! A counterfunction `g` maps a window start `n` to a window length, and
//! `g̃(n) = n + g(n)` advances to the next candidate window start. A
//! learnable rate `φ` turns into a metastable search bound by iterating `g̃`
//! exactly `⌈φ⌉` times from `0`: at least one of the traversed windows
//! `[n; n + g(n)]` must be stable.
//!
//! Iterates can explode (the supermartingale rate alone forces astronomical
//! budgets), so iteration saturates at a configurable cap and reports
//! [`ExtendedIndex::Saturated`] as a value rather than failing.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::liminf::LiminfModulus;
use super::provenance::Provenance;
use super::rate::LearnableRate;
use super::{ceil_to_index, Accuracy, Confidence, ModuliError};

/// Default saturation cap for metastable iteration, `2^48`.
pub const DEFAULT_COUNTERFUNCTION_CAP: u64 = 1 << 48;

/// Either a concrete index or the marker that iteration exceeded the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExtendedIndex {
    Finite(u64),
    Saturated(u64),
}

impl ExtendedIndex {
    pub fn is_saturated(&self) -> bool {
        matches!(self, ExtendedIndex::Saturated(_))
    }

    pub fn finite(&self) -> Option<u64> {
        match self {
            ExtendedIndex::Finite(n) => Some(*n),
            ExtendedIndex::Saturated(_) => None,
        }
    }
}

impl fmt::Display for ExtendedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedIndex::Finite(n) => write!(f, "{n}"),
            ExtendedIndex::Saturated(cap) => write!(f, "saturated@{cap}"),
        }
    }
}

#[derive(Clone)]
enum CfKind {
    Zero,
    Constant(u64),
    Identity,
    Successor,
    Custom {
        name: String,
        f: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
    },
}

/// A total map from indices to window lengths, with a saturation cap for
/// iteration.
#[derive(Clone)]
pub struct Counterfunction {
    kind: CfKind,
    cap: u64,
}

impl fmt::Debug for Counterfunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Counterfunction({}, cap={})", self.describe(), self.cap)
    }
}

impl Counterfunction {
    /// `g ≡ 0`.
    pub fn zero() -> Self {
        Self {
            kind: CfKind::Zero,
            cap: DEFAULT_COUNTERFUNCTION_CAP,
        }
    }

    /// `g ≡ c`.
    pub fn constant(c: u64) -> Self {
        Self {
            kind: CfKind::Constant(c),
            cap: DEFAULT_COUNTERFUNCTION_CAP,
        }
    }

    /// `g(n) = n`.
    pub fn identity() -> Self {
        Self {
            kind: CfKind::Identity,
            cap: DEFAULT_COUNTERFUNCTION_CAP,
        }
    }

    /// `g(n) = n + 1`, so `g̃(n) = 2n + 1` doubles from zero.
    pub fn successor() -> Self {
        Self {
            kind: CfKind::Successor,
            cap: DEFAULT_COUNTERFUNCTION_CAP,
        }
    }

    pub fn from_fn(name: &str, f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        Self {
            kind: CfKind::Custom {
                name: name.to_owned(),
                f: Arc::new(f),
            },
            cap: DEFAULT_COUNTERFUNCTION_CAP,
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            CfKind::Zero => "zero".to_owned(),
            CfKind::Constant(c) => format!("constant({c})"),
            CfKind::Identity => "identity".to_owned(),
            CfKind::Successor => "successor".to_owned(),
            CfKind::Custom { name, .. } => format!("custom({name})"),
        }
    }

    /// The window length `g(n)`.
    pub fn apply(&self, n: u64) -> u64 {
        match &self.kind {
            CfKind::Zero => 0,
            CfKind::Constant(c) => *c,
            CfKind::Identity => n,
            CfKind::Successor => n.saturating_add(1),
            CfKind::Custom { f, .. } => f(n),
        }
    }

    /// The shifted map `g̃(n) = n + g(n)`, saturating at the cap.
    pub fn shifted(&self, n: u64) -> u64 {
        n.saturating_add(self.apply(n)).min(self.cap)
    }

    /// Iterates `g̃` the given number of times from `0`, saturating at the
    /// cap. A fixed point (`g(n) = 0`) short-circuits: every further iterate
    /// equals the current one.
    pub fn iterate_shifted(&self, iterations: u64) -> ExtendedIndex {
        // Constant counterfunctions iterate to exactly `iterations * c`.
        if let CfKind::Constant(c) = self.kind {
            if c == 0 {
                return ExtendedIndex::Finite(0);
            }
            return match iterations.checked_mul(c) {
                Some(n) if n <= self.cap => ExtendedIndex::Finite(n),
                _ => ExtendedIndex::Saturated(self.cap),
            };
        }
        let mut n: u64 = 0;
        for _ in 0..iterations {
            let next = n.saturating_add(self.apply(n));
            if next >= self.cap {
                return ExtendedIndex::Saturated(self.cap);
            }
            if next == n {
                return ExtendedIndex::Finite(n);
            }
            n = next;
        }
        ExtendedIndex::Finite(n)
    }

    /// The candidate window starts `0, g̃(0), g̃²(0), ...` visited by the
    /// iteration, truncated to `max_start` and `max_count`, deduplicated at
    /// fixed points.
    pub fn candidates(&self, iterations: u64, max_start: u64, max_count: usize) -> Vec<u64> {
        let mut out = Vec::new();
        let mut n: u64 = 0;
        let mut steps: u64 = 0;
        while out.len() < max_count && n <= max_start {
            out.push(n);
            if steps >= iterations {
                break;
            }
            let next = self.shifted(n);
            if next == n || next >= self.cap {
                break;
            }
            n = next;
            steps += 1;
        }
        out
    }
}

/// Metastable rate from a fluctuation bound: the `⌈p⌉`-fold iterate of `g̃`
/// at `0`, or `Saturated(cap)` when any iterate exceeds the cap. Never
/// fails; saturation is a value.
pub fn metastable_from_learnable(p: f64, g: &Counterfunction) -> ExtendedIndex {
    let iterations = match ceil_to_index(p) {
        Ok(n) => n,
        // A bound too large to even count iterations is certainly saturated.
        Err(_) => return ExtendedIndex::Saturated(g.cap),
    };
    g.iterate_shifted(iterations)
}

/// A metastable search bound together with the data needed to check it
/// empirically: the iteration map whose iterates are the candidate window
/// starts, and the iteration budget.
#[derive(Clone)]
pub struct MetastableBound {
    /// The bound itself (`Γ` or `Φ`).
    pub bound: ExtendedIndex,
    /// The map `f` whose shifted iterates `0, f̃(0), f̃²(0), ...` are the
    /// candidate window starts.
    pub scan: Counterfunction,
    /// Number of `f̃` iterations the bound accounts for (`⌈φ⌉`).
    pub iterations: u64,
    provenance: Provenance,
}

impl fmt::Debug for MetastableBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetastableBound")
            .field("bound", &self.bound)
            .field("iterations", &self.iterations)
            .field("scan", &self.scan)
            .finish()
    }
}

impl MetastableBound {
    /// Plain metastable bound for a learnable rate evaluated to `p`; the
    /// scan map is the counterfunction itself.
    pub fn from_fluctuation_bound(p: f64, g: &Counterfunction) -> Self {
        let iterations = ceil_to_index(p).unwrap_or(u64::MAX);
        let bound = metastable_from_learnable(p, g);
        let provenance = Provenance::new("metastable_from_learnable", "metastable bound")
            .with_param("p", p)
            .with_param("cap", g.cap as f64)
            .with_detail(serde_json::json!({ "counterfunction": g.describe() }));
        Self {
            bound,
            scan: g.clone(),
            iterations,
            provenance,
        }
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance.clone()
    }
}

/// The search bound `Γ(λ, ε, g)` for an abstract Robbins-Monro-style
/// recursion: with `f(j) = max{g(j), Ψ(λ/2, ε/2, j)}`, some candidate
/// `n <= Γ = f̃^(⌈φ(λ/2, ε/2)⌉)(0)` satisfies
/// `P(∃ k ∈ [n; n + g(n)] : X_k >= ε) < λ`.
///
/// `Ψ` evaluation failures (e.g. a step schedule whose divergence scan
/// overruns its cap) surface as errors.
pub fn rm_metastable(
    phi: &LearnableRate,
    psi: &LiminfModulus,
    lambda: Confidence,
    eps: Accuracy,
    g: &Counterfunction,
) -> Result<MetastableBound, ModuliError> {
    let half_lambda = lambda.value() / 2.0;
    let half_eps = eps.value() / 2.0;
    let p = phi.eval_raw(half_lambda, half_eps);
    let iterations = ceil_to_index(p).unwrap_or(u64::MAX);

    let g_inner = g.clone();
    let psi_inner = psi.clone();
    let scan = Counterfunction::from_fn("max(g, psi)", move |j| {
        let from_psi = psi_inner
            .eval_raw(half_lambda, half_eps, j)
            .unwrap_or(u64::MAX);
        g_inner.apply(j).max(from_psi)
    })
    .with_cap(g.cap());

    let bound = scan.iterate_shifted(iterations);
    let provenance = Provenance::new("rm_metastable", "metastable bound")
        .with_param("lambda", lambda.value())
        .with_param("eps", eps.value())
        .with_param("iterations", iterations as f64)
        .with_detail(serde_json::json!({ "counterfunction": g.describe() }))
        .with_child(phi.provenance())
        .with_child(psi.provenance());
    Ok(MetastableBound {
        bound,
        scan,
        iterations,
        provenance,
    })
}

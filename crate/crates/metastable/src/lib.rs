//! Explicit convergence bounds for stochastic approximation, certified by
//! simulation.
//!
//! Many stochastic algorithms (stochastic gradient descent, Robbins-Monro
//! root finding, quasi-Fejér monotone iterations) are proven convergent by
//! reducing them to an almost-supermartingale recursion
//!
//! ```text
//! E[X_{n+1} | F_n] <= (1 + A_n) X_n - B_n + C_n
//! ```
//!
//! with `sum A_i` and `sum C_i` finite. Convergence of such processes admits
//! no computable rate in general, but it does admit explicit *metastable*
//! bounds: given a confidence `λ`, an accuracy `ε` and a counterfunction `g`,
//! one can bound how far to search for a window `[n; n + g(n)]` on which the
//! process is ε-stable with probability at least `1 - λ`.
//!
//! This crate provides:
//!
//! * [`moduli`] — the bound calculus: learnable rates, boundedness moduli,
//!   liminf-moduli and metastable iteration budgets as composable, evaluable
//!   values that carry a provenance tree recording how they were built.
//! * [`processes`] — seeded, reproducible samplers for process families that
//!   satisfy the hypotheses the bounds require, each shipping certified
//!   moduli metadata.
//! * [`estimators`] — path statistics (fluctuation counts, interval
//!   crossings, oscillation events) and deterministic Monte-Carlo machinery
//!   with confidence intervals.
//! * [`verify`] — procedures tying bounds to experiments, producing
//!   reproducible pass/fail reports.
//!
//! The companion command line tool (`metastable-cli`) drives configured
//! experiments end to end; the mdbook under `book/` walks through the theory
//! and the API with runnable examples.

pub mod estimators;
pub mod moduli;
pub mod processes;
pub mod verify;

pub use moduli::{Accuracy, Confidence};

// Every Rust snippet in the book is compiled and run by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/robbins_siegmund.md")]
    mod robbins_siegmund {}
    #[doc = include_str!("../../../book/src/processes.md")]
    mod processes {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

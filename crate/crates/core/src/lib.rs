//! Coincidental-correctness laboratory.
//!
//! A small instrumented language ([`minilang`]) plus analyses over
//! buggy/fixed version pairs: RIP classification, testing levels,
//! post-infection propagation profiles, infection nullification and
//! information loss, and the effect of coincidentally correct tests on
//! fault localization, suite reduction and prioritization.

pub mod corpus;
pub mod flimpact;
pub mod harness;
pub mod infoloss;
pub mod levels;
pub mod minilang;
pub mod propagation;
pub mod report;
pub mod rip;
pub mod state;
pub mod stats;

use minilang::RuntimeError;

/// A subject program failed at runtime, so its results are excluded.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{subject}/{case} ({side} run): {error}")]
pub struct SubjectError {
    pub subject: String,
    pub case: String,
    pub side: &'static str,
    pub error: RuntimeError,
}

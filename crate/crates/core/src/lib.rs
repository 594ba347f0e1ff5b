//! Weighted Lasso for the Aalen additive hazards model on right-censored
//! data, plus simulation harnesses that check its probabilistic guarantees.
//!
//! Pipeline: [`survival`] (records, at-risk timeline) → [`dictionary`]
//! (evaluated design) → [`gram`] (`H_n`, `h_n`) → [`weights`] (data-driven
//! ℓ1 weights) → [`solver`] (coordinate descent with KKT certificate).
//! [`simulate`], [`bernstein`] and [`oracle`] generate ground truth and
//! measure how often the concentration and oracle bounds hold.

pub mod bernstein;
pub mod cli;
pub mod dictionary;
pub mod error;
pub mod gram;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod simulate;
pub mod solver;
pub mod stats;
pub mod survival;
pub mod weights;

pub use error::{Error, Result};

/// Version tag written into every JSON report.
pub const REPORT_SCHEMA: &str = "1";

pub fn report_schema_version() -> &'static str {
    REPORT_SCHEMA
}

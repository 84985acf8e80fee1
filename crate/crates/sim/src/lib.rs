//! Synthetic cohorts for the safety-net study design: clinic-stratified arm
//! assignment, latent documentation quality, alert trajectories, physician
//! ratings and follow-up outcomes.
//!
//! Each visit draws a latent flaw per category from the arm's target rated
//! error rate, so configured risk ratios hold on the rated scale. Alert
//! colours, ratings and outcomes are drawn conditionally on the flaws.

pub mod arms;
pub mod config;
pub mod export;
pub mod generate;
pub mod materialize;

use thiserror::Error;

pub use arms::assign_arms;
pub use config::{ComplianceModel, Kernel, PerCategory, SeverityModel, SimConfig};
pub use export::{analysis_rows, write_all};
pub use generate::{generate, Clinic, Clinician, Cohort, SimRating, SimVisit, CLINIC_NAMES};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("write failed: {0}")]
    Io(String),
}

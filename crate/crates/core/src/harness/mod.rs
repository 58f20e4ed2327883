//! Experiment harness: scenario configs, bound sweeps, Monte Carlo campaigns
//! and their CSV artifacts.

pub mod campaign;
pub mod config;
pub mod records;

pub use campaign::*;
pub use config::*;
pub use records::{BoundsPoint, BoundsRow, EstimatePoint, Provenance, Record, StudyRow, TrialRow};

//! Estimation of mean time-in-range from intermittently observed glucose
//! trajectories under informative follow-up.
//!
//! The pipeline: model follow-up duration with a Cox proportional hazards fit
//! on the observation history, turn the Breslow baseline into per-subject
//! availability probabilities, reweight the pointwise in-range fractions by
//! those probabilities, and integrate over the horizon. Bootstrap resampling
//! supplies standard errors and Wald tests for group comparisons; the `sim`
//! module generates synthetic cohorts for validating the whole chain.

pub mod error;
pub mod estimators;
pub mod exec;
pub mod grid;
pub mod inference;
pub mod ingest;
pub mod montecarlo;
pub mod range;
pub mod sim;
pub mod special;
pub mod survival;
pub mod trajectory;

pub use error::{Result, TirError};
pub use grid::{TimeGrid, MINUTES_PER_DAY};
pub use range::{in_range, TargetRange};
pub use trajectory::{Cohort, CovariateProcess, Trajectory};

//! Synthetic cohort generation: periodic-kernel Gaussian process glucose
//! paths, intermittent sensor gaps, and informative or non-informative
//! follow-up duration models.

mod followup;
mod gp;
mod kernel;
mod meanfn;
mod missing;
mod scenario;

pub use followup::{
    sample_followup_cox, sample_followup_noninformative, sample_followup_transformed,
    WeibullBaseline,
};
pub use gp::{GpSampler, KernelFactor};
pub use kernel::KernelSpec;
pub use meanfn::MeanFunction;
pub use missing::{inject_intermittent, GapModel};
pub use scenario::{
    analytic_truth, generate_scenario, generate_scenario_cached, group_truth, FollowupModel,
    GeneratedGroup, GroupSpec, ScenarioConfig,
};

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::followup::{
    sample_followup_cox, sample_followup_noninformative, sample_followup_transformed,
    WeibullBaseline,
};
use super::gp::GpSampler;
use super::kernel::KernelSpec;
use super::meanfn::MeanFunction;
use super::missing::{inject_intermittent, GapModel};
use crate::error::{Result, TirError};
use crate::exec::map_indexed;
use crate::grid::{TimeGrid, MINUTES_PER_DAY};
use crate::inference::{label_context, replicate_rng};
use crate::range::TargetRange;
use crate::special::normal_cdf;
use crate::trajectory::{Cohort, CovariateProcess, Trajectory};

/// Follow-up duration mechanism for one simulated group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FollowupModel {
    /// Proportional hazards on (previous-day mean / 100, static Unif(-.5, .5)).
    Informative {
        baseline: WeibullBaseline,
        beta: Vec<f64>,
    },
    /// Follow-up independent of glucose: 0.8 Unif(0,2) + 0.2 Unif(2,9) days.
    NonInformative,
    /// Log-scale transformation model driven by a latent Bernoulli flag that
    /// also shifts the glucose trend; breaks proportional hazards on purpose.
    Transformed {
        scale: f64,
        mixture_p: f64,
        mean_shift: f64,
    },
}

/// One simulated arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub n_subjects: usize,
    pub mean: MeanFunction,
    pub followup: FollowupModel,
    /// Overrides the scenario-wide gap process when set.
    #[serde(default)]
    pub gaps: Option<GapModel>,
}

/// Full synthetic-cohort design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub step_minutes: f64,
    pub tau_days: f64,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub gaps: GapModel,
    pub groups: Vec<GroupSpec>,
}

impl ScenarioConfig {
    /// Rising mean trend used by benchmark groups 1 and 3: glucose starts
    /// around 155 mg/dL, climbs toward 200, and oscillates daily.
    fn benchmark_mean_rising() -> MeanFunction {
        MeanFunction::Parametric {
            baseline: 200.0,
            decay_amplitude: -45.0,
            decay_rate_per_day: 0.4,
            daily_amplitude: 20.0,
            phase: 0.0,
        }
    }

    /// Falling mean trend used by benchmark group 2: starts around 200 and
    /// settles toward 140.
    fn benchmark_mean_falling() -> MeanFunction {
        MeanFunction::Parametric {
            baseline: 140.0,
            decay_amplitude: 60.0,
            decay_rate_per_day: 0.4,
            daily_amplitude: 20.0,
            phase: 0.0,
        }
    }

    /// Three-arm benchmark with informative (proportional-hazards) follow-up
    /// on a 5-minute, 7-day grid. Groups 1 and 3 share the rising mean trend
    /// (equal mean TIR, so their comparison measures test size); group 2 has
    /// the falling trend (so group 1 vs 2 measures power). Group 3 terminates
    /// follow-up much earlier than group 1, which stresses the weighting.
    pub fn informative_benchmark(n: usize) -> ScenarioConfig {
        ScenarioConfig {
            step_minutes: 5.0,
            tau_days: 7.0,
            kernel: KernelSpec::default(),
            gaps: GapModel::default(),
            groups: vec![
                GroupSpec {
                    label: "group1".into(),
                    n_subjects: n,
                    mean: Self::benchmark_mean_rising(),
                    followup: FollowupModel::Informative {
                        baseline: WeibullBaseline {
                            scale: 0.30,
                            shape: 0.0,
                        },
                        beta: vec![-0.5, -0.5],
                    },
                    gaps: None,
                },
                GroupSpec {
                    label: "group2".into(),
                    n_subjects: n,
                    mean: Self::benchmark_mean_falling(),
                    followup: FollowupModel::Informative {
                        baseline: WeibullBaseline {
                            scale: 0.035,
                            shape: 0.0,
                        },
                        beta: vec![1.0, 1.0],
                    },
                    gaps: None,
                },
                GroupSpec {
                    label: "group3".into(),
                    n_subjects: n,
                    mean: Self::benchmark_mean_rising(),
                    followup: FollowupModel::Informative {
                        baseline: WeibullBaseline {
                            scale: 0.07,
                            shape: 0.5,
                        },
                        beta: vec![1.0, 1.0],
                    },
                    gaps: None,
                },
            ],
        }
    }

    /// Same three arms but with follow-up from the log-scale transformation
    /// model, which violates proportional hazards when `mixture_p > 0`. The
    /// latent flag shifts the trend down 3 mg/dL in groups 1 and 3 and up 3
    /// in group 2; group 3's smaller scale gives it much shorter follow-up.
    pub fn transformed_benchmark(n: usize, mixture_p: f64) -> ScenarioConfig {
        let arm = |label: &str, mean: MeanFunction, scale: f64, mean_shift: f64| GroupSpec {
            label: label.into(),
            n_subjects: n,
            mean,
            followup: FollowupModel::Transformed {
                scale,
                mixture_p,
                mean_shift,
            },
            gaps: None,
        };
        ScenarioConfig {
            step_minutes: 5.0,
            tau_days: 7.0,
            kernel: KernelSpec::default(),
            gaps: GapModel::default(),
            groups: vec![
                arm("group1", Self::benchmark_mean_rising(), 8.0, -3.0),
                arm("group2", Self::benchmark_mean_falling(), 8.0, 3.0),
                arm("group3", Self::benchmark_mean_rising(), 3.0, -3.0),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.gaps.validate()?;
        if self.groups.is_empty() {
            return Err(TirError::Config("scenario defines no groups".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.n_subjects < 2 {
                return Err(TirError::Config(format!(
                    "group `{}` needs at least 2 subjects",
                    g.label
                )));
            }
            if self.groups[..i].iter().any(|h| h.label == g.label) {
                return Err(TirError::Config(format!(
                    "duplicate group label `{}`",
                    g.label
                )));
            }
            if let Some(gaps) = &g.gaps {
                gaps.validate()?;
            }
            if let FollowupModel::Informative { baseline, beta } = &g.followup {
                baseline.validate()?;
                if beta.len() != 2 {
                    return Err(TirError::Config(format!(
                        "group `{}`: informative follow-up uses 2 coefficients, got {}",
                        g.label,
                        beta.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Matched pair of cohorts for one group: the analysis view (intermittent
/// gaps plus follow-up truncation) and the fully observed ground-truth view.
#[derive(Debug, Clone)]
pub struct GeneratedGroup {
    pub masked: Cohort,
    pub complete: Cohort,
}

struct SubjectDraw {
    glucose: Vec<f64>,
    mask: Vec<bool>,
    followup_days: f64,
    /// static second covariate column
    extra: f64,
}

fn draw_subject<R: Rng>(
    rng: &mut R,
    sampler: &GpSampler,
    grid: &Arc<TimeGrid>,
    gaps: &GapModel,
    followup: &FollowupModel,
    subject_id: &str,
    overrun_days: f64,
) -> Result<SubjectDraw> {
    let mut glucose = sampler.draw(rng);
    let mask = inject_intermittent(rng, grid, gaps)?;
    match followup {
        FollowupModel::Informative { baseline, beta } => {
            let extra = rng.gen_range(-0.5..0.5);
            // covariates are built from the pre-truncation observation
            // process, exactly what the analysis model later sees
            let pre = Trajectory::new(
                subject_id,
                Arc::clone(grid),
                glucose.clone(),
                mask.clone(),
                overrun_days,
            )?;
            let cov = CovariateProcess::from_columns(
                subject_id,
                Arc::clone(grid),
                &[pre.prev_day_mean_path(), vec![extra; grid.len()]],
            )?;
            let followup_days = sample_followup_cox(rng, baseline, beta, &cov, grid)?;
            Ok(SubjectDraw {
                glucose,
                mask,
                followup_days,
                extra,
            })
        }
        FollowupModel::NonInformative => {
            let extra = rng.gen_range(-0.5..0.5);
            let followup_days = sample_followup_noninformative(rng);
            Ok(SubjectDraw {
                glucose,
                mask,
                followup_days,
                extra,
            })
        }
        FollowupModel::Transformed {
            scale,
            mixture_p,
            mean_shift,
        } => {
            let (followup_days, zeta) = sample_followup_transformed(rng, *scale, *mixture_p);
            if zeta {
                for g in &mut glucose {
                    *g += mean_shift;
                }
            }
            Ok(SubjectDraw {
                glucose,
                mask,
                followup_days,
                extra: zeta as u8 as f64,
            })
        }
    }
}

/// Generates every group of the scenario. Each subject draws from its own
/// `(seed, group, subject)` RNG stream, so output is identical across thread
/// counts and generation order.
pub fn generate_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<GeneratedGroup>> {
    cfg.validate()?;
    let grid = Arc::new(TimeGrid::new(cfg.step_minutes, cfg.tau_days)?);
    let factor = Arc::new(super::gp::KernelFactor::new(&grid, &cfg.kernel)?);
    generate_scenario_cached(cfg, seed, &grid, &factor)
}

/// Same as [`generate_scenario`] but with the grid and kernel factor computed
/// once by the caller; replication harnesses reuse them across repetitions.
pub fn generate_scenario_cached(
    cfg: &ScenarioConfig,
    seed: u64,
    grid: &Arc<TimeGrid>,
    factor: &Arc<super::gp::KernelFactor>,
) -> Result<Vec<GeneratedGroup>> {
    cfg.validate()?;
    let grid = Arc::clone(grid);
    let overrun = cfg.tau_days + cfg.step_minutes / MINUTES_PER_DAY;
    let mut out = Vec::with_capacity(cfg.groups.len());
    for spec in &cfg.groups {
        let sampler = GpSampler::from_factor(&grid, &spec.mean, Arc::clone(factor))?;
        let context = label_context(&spec.label);
        let draws: Vec<Result<SubjectDraw>> = map_indexed(spec.n_subjects, |i| {
            let mut rng = replicate_rng(seed, context, i as u64);
            draw_subject(
                &mut rng,
                &sampler,
                &grid,
                spec.gaps.as_ref().unwrap_or(&cfg.gaps),
                &spec.followup,
                &format!("{}-{i}", spec.label),
                overrun,
            )
        });
        let mut masked_traj = Vec::with_capacity(spec.n_subjects);
        let mut masked_cov = Vec::with_capacity(spec.n_subjects);
        let mut complete_traj = Vec::with_capacity(spec.n_subjects);
        let mut complete_cov = Vec::with_capacity(spec.n_subjects);
        for (i, draw) in draws.into_iter().enumerate() {
            let draw = draw?;
            let id = format!("{}-{i}", spec.label);
            let masked = Trajectory::new(
                id.clone(),
                Arc::clone(&grid),
                draw.glucose.clone(),
                draw.mask.clone(),
                draw.followup_days,
            )?;
            let extra_col = vec![draw.extra; grid.len()];
            // model covariates use the pre-truncation observation process so
            // they are defined at every event time
            let pre = Trajectory::new(
                id.clone(),
                Arc::clone(&grid),
                draw.glucose.clone(),
                draw.mask,
                overrun,
            )?;
            masked_cov.push(CovariateProcess::from_columns(
                id.clone(),
                Arc::clone(&grid),
                &[pre.prev_day_mean_path(), extra_col.clone()],
            )?);
            masked_traj.push(masked);
            let complete = Trajectory::new(
                id.clone(),
                Arc::clone(&grid),
                draw.glucose,
                vec![true; grid.len()],
                overrun,
            )?;
            complete_cov.push(CovariateProcess::from_columns(
                id,
                Arc::clone(&grid),
                &[complete.prev_day_mean_path(), extra_col],
            )?);
            complete_traj.push(complete);
        }
        out.push(GeneratedGroup {
            masked: Cohort::new(
                Arc::clone(&grid),
                masked_traj,
                masked_cov,
                spec.label.clone(),
            )?,
            complete: Cohort::new(
                Arc::clone(&grid),
                complete_traj,
                complete_cov,
                spec.label.clone(),
            )?,
        });
    }
    Ok(out)
}

/// Population mean TIR implied by a Gaussian marginal around the trend:
/// averages `Pr(Y(t) in G)` over the grid's left endpoints.
pub fn analytic_truth(
    mean: &MeanFunction,
    sigma: f64,
    grid: &TimeGrid,
    range: &TargetRange,
) -> Result<f64> {
    let mu = mean.on_grid(grid)?;
    let k = grid.integration_points();
    let prob = |m: f64| {
        let hi = if range.upper.is_infinite() {
            1.0
        } else {
            normal_cdf((range.upper - m) / sigma)
        };
        let lo = if range.lower.is_infinite() {
            0.0
        } else {
            normal_cdf((range.lower - m) / sigma)
        };
        hi - lo
    };
    Ok(mu[..k].iter().map(|&m| prob(m)).sum::<f64>() / k as f64)
}

/// Group-level ground truth; transformed groups average the two latent-flag
/// trends with equal weight.
pub fn group_truth(
    spec: &GroupSpec,
    kernel: &KernelSpec,
    grid: &TimeGrid,
    range: &TargetRange,
) -> Result<f64> {
    match &spec.followup {
        FollowupModel::Transformed { mean_shift, .. } => {
            let base = analytic_truth(&spec.mean, kernel.sigma, grid, range)?;
            let shifted =
                analytic_truth(&spec.mean.shifted(*mean_shift), kernel.sigma, grid, range)?;
            Ok(0.5 * (base + shifted))
        }
        _ => analytic_truth(&spec.mean, kernel.sigma, grid, range),
    }
}

//! Scenario TOML schema for `simulate` and `replicate`.
//!
//! ```toml
//! seed = 42                 # optional; --seed overrides
//!
//! [grid]
//! step_minutes = 5.0
//! tau_days = 7.0
//!
//! [kernel]                  # optional, defaults shown
//! sigma = 62.0
//! l = 1.0
//! p = 1440.0
//! jitter = 1e-8
//!
//! [missing]                 # optional scenario-wide gap process
//! mean_wait_minutes = 3424.0
//! min_length_minutes = 10.0
//! max_length_minutes = 70.0
//!
//! [[groups]]
//! label = "group1"
//! n = 200
//! [groups.mean]
//! kind = "parametric"
//! baseline = 185.0
//! decay_amplitude = -35.0
//! decay_rate_per_day = 0.9
//! daily_amplitude = 20.0
//! phase = 0.0
//! [groups.followup]
//! kind = "informative"
//! beta = [-0.5, -0.5]
//! [groups.followup.baseline]
//! scale = 0.12
//! shape = 0.0
//! # optional per-group [groups.missing] override
//! ```

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;
use tir_core::sim::{FollowupModel, GapModel, GroupSpec, KernelSpec, MeanFunction, ScenarioConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: Option<u64>,
    grid: GridSection,
    #[serde(default)]
    kernel: KernelSection,
    missing: Option<GapModel>,
    groups: Vec<GroupSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    step_minutes: f64,
    tau_days: f64,
}

/// Kernel parameters under their short published names, with the longer
/// library names accepted as aliases.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSection {
    sigma: Option<f64>,
    #[serde(alias = "length_scale")]
    l: Option<f64>,
    #[serde(alias = "period_minutes")]
    p: Option<f64>,
    #[serde(alias = "jitter_rel")]
    jitter: Option<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection {
            sigma: None,
            l: None,
            p: None,
            jitter: None,
        }
    }
}

impl KernelSection {
    fn to_spec(&self) -> KernelSpec {
        let d = KernelSpec::default();
        KernelSpec {
            sigma: self.sigma.unwrap_or(d.sigma),
            length_scale: self.l.unwrap_or(d.length_scale),
            period_minutes: self.p.unwrap_or(d.period_minutes),
            jitter_rel: self.jitter.unwrap_or(d.jitter_rel),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupSection {
    label: String,
    n: usize,
    mean: MeanFunction,
    followup: FollowupModel,
    missing: Option<GapModel>,
}

/// Loads a scenario file and returns the core scenario plus the file's
/// optional seed.
pub fn load_scenario(path: &Path) -> Result<(ScenarioConfig, Option<u64>)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))?;
    let file: ScenarioFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse scenario file {}", path.display()))?;
    let cfg = ScenarioConfig {
        step_minutes: file.grid.step_minutes,
        tau_days: file.grid.tau_days,
        kernel: file.kernel.to_spec(),
        gaps: file.missing.unwrap_or_default(),
        groups: file
            .groups
            .into_iter()
            .map(|g| GroupSpec {
                label: g.label,
                n_subjects: g.n,
                mean: g.mean,
                followup: g.followup,
                gaps: g.missing,
            })
            .collect(),
    };
    cfg.validate()
        .with_context(|| format!("invalid scenario in {}", path.display()))?;
    Ok((cfg, file.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn full_scenario_round_trip() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        write!(
            tmp,
            r#"
seed = 11

[grid]
step_minutes = 30.0
tau_days = 2.0

[kernel]
sigma = 40.0

[missing]
mean_wait_minutes = 900.0

[[groups]]
label = "a"
n = 4
[groups.mean]
kind = "parametric"
baseline = 150.0
decay_amplitude = 0.0
decay_rate_per_day = 0.0
daily_amplitude = 0.0
phase = 0.0
[groups.followup]
kind = "non-informative"

[[groups]]
label = "b"
n = 3
[groups.mean]
kind = "parametric"
baseline = 120.0
decay_amplitude = 0.0
decay_rate_per_day = 0.0
daily_amplitude = 0.0
phase = 0.0
[groups.followup]
kind = "transformed"
scale = 8.0
mixture_p = 1.0
mean_shift = -3.0
[groups.missing]
mean_wait_minutes = 500.0
"#
        )
        .unwrap();
        let (cfg, seed) = load_scenario(tmp.path()).unwrap();
        assert_eq!(seed, Some(11));
        assert_eq!(cfg.step_minutes, 30.0);
        assert_eq!(cfg.kernel.sigma, 40.0);
        assert_eq!(cfg.kernel.period_minutes, 1440.0, "kernel defaults fill in");
        assert_eq!(cfg.gaps.mean_wait_minutes, 900.0);
        assert_eq!(cfg.groups.len(), 2);
        assert_eq!(cfg.groups[0].n_subjects, 4);
        assert!(cfg.groups[0].gaps.is_none());
        assert_eq!(cfg.groups[1].gaps.unwrap().mean_wait_minutes, 500.0);
    }

    #[test]
    fn invalid_scenario_rejected() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        write!(tmp, "[grid]\nstep_minutes = 5.0\ntau_days = 7.0\ngroups = []").unwrap();
        assert!(load_scenario(tmp.path()).is_err());
    }
}

//! Shared command options and the config-file merge.
//!
//! Every flag can also be supplied by a TOML config file via `--config`;
//! explicit flags override file values, which override built-in defaults.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Deserialize;
use tir_core::estimators::WeightModel;

/// Estimator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Naive,
    Proposed,
    Simplified,
    Oracle,
    All,
}

/// Follow-up weight model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Cox,
    Km,
}

impl From<ModeArg> for WeightModel {
    fn from(mode: ModeArg) -> WeightModel {
        match mode {
            ModeArg::Cox => WeightModel::Cox,
            ModeArg::Km => WeightModel::ProductLimit,
        }
    }
}

/// Options shared by every subcommand. All fields are optional here; each
/// command applies its own defaults after the config-file merge.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonOpts {
    /// TOML file that may supply any other flag; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Readings CSV: subject_id,time_minutes,glucose_mgdl.
    #[arg(long)]
    pub readings: Option<PathBuf>,
    /// Follow-up CSV: subject_id,followup_days.
    #[arg(long)]
    pub followups: Option<PathBuf>,
    /// Optional extra covariates CSV: subject_id,time_minutes,z1[,z2,...].
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    /// Group dataset `LABEL=READINGS,FOLLOWUPS[,COVARIATES]`; repeat per group.
    #[arg(long = "group")]
    pub groups: Vec<String>,
    /// Group label for single-cohort commands.
    #[arg(long)]
    pub label: Option<String>,
    /// Target ranges: `standard3`, `extended6`, or e.g. `[70,180],(180,inf)`.
    #[arg(long)]
    pub ranges: Option<String>,
    /// Horizons in days: `standard5` (1,3,5,7,9) or a comma-separated list.
    #[arg(long = "tau-days")]
    pub tau_days: Option<String>,
    /// Analysis grid step in minutes.
    #[arg(long = "step-minutes")]
    pub step_minutes: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Bootstrap resamples for standard errors and tests.
    #[arg(long = "bootstrap-B")]
    pub bootstrap_b: Option<usize>,
    /// Lower clamp on estimated availability probabilities.
    #[arg(long = "weight-floor")]
    pub weight_floor: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo repetitions for `replicate`.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Per-group sample size for the built-in benchmark scenarios.
    #[arg(long)]
    pub n: Option<usize>,
    /// Test size for rejection-rate summaries.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Subjects with shorter follow-up are dropped during ingestion.
    #[arg(long = "min-followup-days")]
    pub min_followup_days: Option<f64>,
    /// Scenario TOML for `simulate` / `replicate`.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A `--tau-days`-style value in a config file: string, number, or list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumberListValue {
    Text(String),
    Number(f64),
    List(Vec<f64>),
}

impl NumberListValue {
    fn to_spec(&self) -> String {
        match self {
            NumberListValue::Text(s) => s.clone(),
            NumberListValue::Number(x) => format!("{x}"),
            NumberListValue::List(xs) => xs
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

/// Config-file counterpart of [`CommonOpts`].
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    readings: Option<PathBuf>,
    followups: Option<PathBuf>,
    covariates: Option<PathBuf>,
    group: Option<Vec<String>>,
    label: Option<String>,
    ranges: Option<String>,
    tau_days: Option<NumberListValue>,
    step_minutes: Option<f64>,
    method: Option<MethodArg>,
    mode: Option<ModeArg>,
    #[serde(alias = "bootstrap_B")]
    bootstrap_b: Option<usize>,
    weight_floor: Option<f64>,
    seed: Option<u64>,
    reps: Option<usize>,
    n: Option<usize>,
    alpha: Option<f64>,
    min_followup_days: Option<f64>,
    scenario: Option<PathBuf>,
    out: Option<PathBuf>,
}

impl CommonOpts {
    /// Fills unset flags from the `--config` file, if any.
    pub fn merged(mut self) -> Result<CommonOpts> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let file: FileConfig = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        macro_rules! merge {
            ($($field:ident),*) => {
                $(if self.$field.is_none() { self.$field = file.$field; })*
            };
        }
        merge!(
            readings,
            followups,
            covariates,
            label,
            ranges,
            step_minutes,
            method,
            mode,
            bootstrap_b,
            weight_floor,
            seed,
            reps,
            n,
            alpha,
            min_followup_days,
            scenario,
            out
        );
        if self.tau_days.is_none() {
            self.tau_days = file.tau_days.map(|v| v.to_spec());
        }
        if self.groups.is_empty() {
            self.groups = file.group.unwrap_or_default();
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            tmp,
            "seed = 9\nbootstrap_b = 50\ntau_days = [1, 3]\nmethod = \"naive\"\ngroup = [\"a=r.csv,f.csv\"]"
        )
        .unwrap();
        let opts = CommonOpts {
            config: Some(tmp.path().to_path_buf()),
            seed: Some(1),
            ..CommonOpts::default()
        };
        let merged = opts.merged().unwrap();
        assert_eq!(merged.seed, Some(1), "explicit flag wins");
        assert_eq!(merged.bootstrap_b, Some(50));
        assert_eq!(merged.tau_days.as_deref(), Some("1,3"));
        assert_eq!(merged.method, Some(MethodArg::Naive));
        assert_eq!(merged.groups, vec!["a=r.csv,f.csv".to_string()]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut tmp = tempfile::NamedTempFile::new().unwrap();
        writeln!(tmp, "sede = 9").unwrap();
        let opts = CommonOpts {
            config: Some(tmp.path().to_path_buf()),
            ..CommonOpts::default()
        };
        assert!(opts.merged().is_err());
    }
}

//! Replication harness: repeatedly simulate cohorts, run the oracle, naive,
//! and weighted estimators with bootstrap inference, and aggregate bias,
//! spread, and test-rejection summaries.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TirError};
use crate::estimators::{
    naive_subject_tirs, proposed_pipeline, subject_tir_oracle, EstimateOptions,
};
use crate::exec::map_indexed;
use crate::grid::TimeGrid;
use crate::inference::{bootstrap_estimates, label_context, replicate_rng, BootstrapOptions};
use crate::range::TargetRange;
use crate::sim::{generate_scenario_cached, group_truth, KernelFactor, ScenarioConfig};
use crate::special::chi_square_upper_tail;
use crate::trajectory::Cohort;
use rand::Rng;

const Z_975: f64 = 1.959963984540054;

/// The three estimators tracked by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Complete-data per-subject average (needs the unmasked cohorts).
    Oracle,
    /// Available-readings average, ignoring the missingness mechanism.
    Naive,
    /// Inverse-weighted pooled estimator.
    Proposed,
}

pub const METHODS: [Method; 3] = [Method::Oracle, Method::Naive, Method::Proposed];

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Oracle => write!(f, "oracle"),
            Method::Naive => write!(f, "naive"),
            Method::Proposed => write!(f, "proposed"),
        }
    }
}

/// Replication run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub scenario: ScenarioConfig,
    pub reps: usize,
    pub bootstrap_b: usize,
    pub seed: u64,
    /// Test size for the rejection-rate summaries.
    pub alpha: f64,
}

/// One aggregated cell: group x method x range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group: String,
    pub method: Method,
    pub range: String,
    /// Population value implied by the generative model.
    pub truth: f64,
    pub avg_estimate: f64,
    pub rel_bias_vs_truth: f64,
    /// Bias relative to the average oracle estimate of the same cell.
    pub rel_bias_vs_oracle: f64,
    /// Empirical standard deviation across repetitions.
    pub esd: f64,
    /// Average bootstrap standard error.
    pub avg_bse: f64,
    /// Fraction of repetitions whose normal CI covers the truth.
    pub coverage_normal: f64,
}

/// One aggregated pairwise test cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestRow {
    pub group_a: String,
    pub group_b: String,
    pub method: Method,
    pub range: String,
    pub rejection_rate: f64,
    pub reps: usize,
}

#[derive(Debug, Clone)]
pub struct MonteCarloReport {
    pub summaries: Vec<SummaryRow>,
    pub tests: Vec<TestRow>,
    pub reps_completed: usize,
    pub reps_failed: usize,
}

/// est[group][method][range], se likewise, replicates kept per cell for the
/// pairwise tests
struct RepData {
    est: Vec<Vec<Vec<f64>>>,
    se: Vec<Vec<Vec<f64>>>,
    p: Vec<Vec<Vec<f64>>>, // [pair][method][range]
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-subject bootstrap of a mean of fixed per-subject values; cheap path
/// for the oracle and naive estimators whose per-subject statistics do not
/// change across resamples.
fn bootstrap_subject_means(
    w: &[Vec<f64>], // [range][subject]
    b: usize,
    seed: u64,
    context: u64,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = w[0].len();
    let mut replicates = Vec::with_capacity(b);
    for r in 0..b {
        let mut rng = replicate_rng(seed, context, r as u64);
        let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        replicates.push(
            w.iter()
                .map(|col| indices.iter().map(|&i| col[i]).sum::<f64>() / n as f64)
                .collect(),
        );
    }
    let se = (0..w.len())
        .map(|c| {
            let vals: Vec<f64> = replicates.iter().map(|r: &Vec<f64>| r[c]).collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
        })
        .collect();
    (se, replicates)
}

fn pair_p_value(d: f64, reps_a: &[f64], reps_b: &[f64]) -> f64 {
    let m = reps_a.len().min(reps_b.len());
    if m < 2 {
        return f64::NAN;
    }
    let diffs: Vec<f64> = (0..m).map(|i| reps_a[i] - reps_b[i]).collect();
    let mean = diffs.iter().sum::<f64>() / m as f64;
    let var = diffs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    if var <= 0.0 {
        return if d == 0.0 { 1.0 } else { 0.0 };
    }
    chi_square_upper_tail(d * d / var, 1)
}

fn run_rep(
    cfg: &MonteCarloConfig,
    ranges: &[TargetRange],
    estimate: &EstimateOptions,
    grid: &Arc<TimeGrid>,
    factor: &Arc<KernelFactor>,
    rep: usize,
) -> Result<RepData> {
    let rep_seed = splitmix64(cfg.seed ^ (rep as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
    let groups = generate_scenario_cached(&cfg.scenario, rep_seed, grid, factor)?;
    let n_groups = groups.len();
    let n_ranges = ranges.len();
    let mut est = vec![vec![vec![0.0; n_ranges]; 3]; n_groups];
    let mut se = vec![vec![vec![0.0; n_ranges]; 3]; n_groups];
    let mut reps_store: Vec<Vec<Vec<Vec<f64>>>> = Vec::with_capacity(n_groups);

    for (g, group) in groups.iter().enumerate() {
        let label_ctx = label_context(&group.masked.group_label);

        // oracle: per-subject complete-data fractions
        let oracle_w: Vec<Vec<f64>> = ranges
            .iter()
            .map(|range| {
                group
                    .complete
                    .trajectories
                    .iter()
                    .map(|t| subject_tir_oracle(t, range))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let n = oracle_w[0].len() as f64;
        for (r, col) in oracle_w.iter().enumerate() {
            est[g][0][r] = col.iter().sum::<f64>() / n;
        }
        let (oracle_se, oracle_reps) = bootstrap_subject_means(
            &oracle_w,
            cfg.bootstrap_b,
            rep_seed,
            label_ctx ^ 0x6f72,
        );
        se[g][0] = oracle_se;

        // naive
        let naive_w: Vec<Vec<f64>> = ranges
            .iter()
            .map(|range| naive_subject_tirs(&group.masked, range))
            .collect::<Result<_>>()?;
        for (r, col) in naive_w.iter().enumerate() {
            est[g][1][r] = col.iter().sum::<f64>() / n;
        }
        let (naive_se, naive_reps) = bootstrap_subject_means(
            &naive_w,
            cfg.bootstrap_b,
            rep_seed,
            label_ctx ^ 0x6e61,
        );
        se[g][1] = naive_se;

        // weighted pipeline with full refit on every resample
        let boot_opts = BootstrapOptions {
            b: cfg.bootstrap_b,
            seed: rep_seed,
            ..BootstrapOptions::default()
        };
        let proposed = bootstrap_estimates(&group.masked, &boot_opts, |c: &Cohort| {
            let out = proposed_pipeline(c, ranges, estimate)?;
            Ok(out.estimates.iter().map(|e| e.mu_hat).collect())
        })?;
        est[g][2] = proposed.point.clone();
        se[g][2] = proposed.se.clone();
        reps_store.push(vec![oracle_reps, naive_reps, proposed.replicates]);
    }

    let mut p = Vec::new();
    for a in 0..n_groups {
        for b in (a + 1)..n_groups {
            let mut per_method = vec![vec![0.0; n_ranges]; 3];
            for m in 0..3 {
                for r in 0..n_ranges {
                    let ra: Vec<f64> = reps_store[a][m].iter().map(|v| v[r]).collect();
                    let rb: Vec<f64> = reps_store[b][m].iter().map(|v| v[r]).collect();
                    per_method[m][r] = pair_p_value(est[a][m][r] - est[b][m][r], &ra, &rb);
                }
            }
            p.push(per_method);
        }
    }
    Ok(RepData { est, se, p })
}

/// Runs the full replication study. Repetitions are independent and mapped in
/// parallel; a repetition that fails (for example a singular follow-up fit on
/// an unlucky draw) is dropped, with a hard error if more than 5% fail.
pub fn run_monte_carlo(
    cfg: &MonteCarloConfig,
    ranges: &[TargetRange],
    estimate: &EstimateOptions,
) -> Result<MonteCarloReport> {
    if cfg.reps < 2 {
        return Err(TirError::Config(format!(
            "replication study needs at least 2 repetitions, got {}",
            cfg.reps
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(TirError::Config(format!(
            "test size must lie in (0, 1), got {}",
            cfg.alpha
        )));
    }
    cfg.scenario.validate()?;
    if ranges.is_empty() {
        return Err(TirError::Config("no target ranges supplied".into()));
    }
    let grid = Arc::new(TimeGrid::new(
        cfg.scenario.step_minutes,
        cfg.scenario.tau_days,
    )?);
    let factor = Arc::new(KernelFactor::new(&grid, &cfg.scenario.kernel)?);

    let raw: Vec<Result<RepData>> = map_indexed(cfg.reps, |rep| {
        run_rep(cfg, ranges, estimate, &grid, &factor, rep)
    });
    let reps_failed = raw.iter().filter(|r| r.is_err()).count();
    if reps_failed as f64 > 0.05 * cfg.reps as f64 {
        // surface the first failure; it is usually systematic
        let first = raw.into_iter().find_map(|r| r.err()).unwrap();
        return Err(first.at_stage("replication study"));
    }
    let data: Vec<RepData> = raw.into_iter().filter_map(|r| r.ok()).collect();
    let reps_completed = data.len();

    let n_groups = cfg.scenario.groups.len();
    let n_ranges = ranges.len();
    let truths: Vec<Vec<f64>> = cfg
        .scenario
        .groups
        .iter()
        .map(|spec| {
            ranges
                .iter()
                .map(|range| group_truth(spec, &cfg.scenario.kernel, &grid, range))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut summaries = Vec::new();
    for g in 0..n_groups {
        // oracle averages first: the bias reference for the other methods
        let oracle_avg: Vec<f64> = (0..n_ranges)
            .map(|r| data.iter().map(|d| d.est[g][0][r]).sum::<f64>() / reps_completed as f64)
            .collect();
        for (m, method) in METHODS.iter().enumerate() {
            for r in 0..n_ranges {
                let vals: Vec<f64> = data.iter().map(|d| d.est[g][m][r]).collect();
                let ses: Vec<f64> = data.iter().map(|d| d.se[g][m][r]).collect();
                let avg = vals.iter().sum::<f64>() / vals.len() as f64;
                let esd = (vals.iter().map(|v| (v - avg).powi(2)).sum::<f64>()
                    / (vals.len() - 1) as f64)
                    .sqrt();
                let avg_bse = ses.iter().sum::<f64>() / ses.len() as f64;
                let truth = truths[g][r];
                let coverage = vals
                    .iter()
                    .zip(&ses)
                    .filter(|(v, s)| (truth - *v).abs() <= Z_975 * **s)
                    .count() as f64
                    / vals.len() as f64;
                summaries.push(SummaryRow {
                    group: cfg.scenario.groups[g].label.clone(),
                    method: *method,
                    range: ranges[r].label(),
                    truth,
                    avg_estimate: avg,
                    rel_bias_vs_truth: (avg - truth) / truth,
                    rel_bias_vs_oracle: (avg - oracle_avg[r]) / oracle_avg[r],
                    esd,
                    avg_bse,
                    coverage_normal: coverage,
                });
            }
        }
    }

    let mut tests = Vec::new();
    let mut pair = 0usize;
    for a in 0..n_groups {
        for b in (a + 1)..n_groups {
            for (m, method) in METHODS.iter().enumerate() {
                for r in 0..n_ranges {
                    let ps: Vec<f64> = data
                        .iter()
                        .map(|d| d.p[pair][m][r])
                        .filter(|p| p.is_finite())
                        .collect();
                    let rejection_rate = ps.iter().filter(|&&p| p < cfg.alpha).count() as f64
                        / ps.len().max(1) as f64;
                    tests.push(TestRow {
                        group_a: cfg.scenario.groups[a].label.clone(),
                        group_b: cfg.scenario.groups[b].label.clone(),
                        method: *method,
                        range: ranges[r].label(),
                        rejection_rate,
                        reps: ps.len(),
                    });
                }
            }
            pair += 1;
        }
    }

    Ok(MonteCarloReport {
        summaries,
        tests,
        reps_completed,
        reps_failed,
    })
}

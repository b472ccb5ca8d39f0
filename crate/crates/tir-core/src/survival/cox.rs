use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SurvivalCurve;
use crate::error::{Result, TirError};
use crate::grid::{TimeGrid, MINUTES_PER_DAY};
use crate::trajectory::{Cohort, CovariateProcess};

/// One Breslow step of the cumulative baseline hazard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreslowJump {
    pub time_days: f64,
    pub increment: f64,
    pub cumulative: f64,
}

/// Fitted Cox model: coefficients plus the Breslow cumulative baseline
/// hazard as a right-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub beta_hat: Vec<f64>,
    pub breslow: Vec<BreslowJump>,
    pub converged: bool,
    pub iterations: usize,
    pub final_score_norm: f64,
    pub log_partial_likelihood: f64,
}

/// Newton solver knobs. The defaults match the documented contract: damped
/// Newton from beta = 0, score sup-norm tolerance 1e-8, log-likelihood
/// change tolerance 1e-12, at most 100 iterations with up to 20 halvings.
#[derive(Debug, Clone, Copy)]
pub struct CoxOptions {
    pub score_tol: f64,
    pub loglik_tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions {
            score_tol: 1e-8,
            loglik_tol: 1e-12,
            max_iterations: 100,
            max_halvings: 20,
        }
    }
}

struct EventBlock {
    /// event time in days
    time: f64,
    /// subjects failing at this time
    events: Vec<usize>,
    /// risk set: subjects with end time >= this event time
    risk: Vec<usize>,
    /// grid index governing covariate left limits at this time
    cov_idx: usize,
}

fn build_event_blocks(
    cohort: &Cohort,
    tau_days: f64,
) -> Result<Vec<EventBlock>> {
    let grid = &cohort.grid;
    let n = cohort.len();
    // end time = C_i capped administratively at tau; events are C_i <= tau
    let ends: Vec<(f64, bool)> = cohort
        .trajectories
        .iter()
        .map(|t| {
            let c = t.followup_days;
            (c.min(tau_days), c <= tau_days)
        })
        .collect();
    let mut event_times: Vec<f64> = ends
        .iter()
        .filter(|(_, is_event)| *is_event)
        .map(|(t, _)| *t)
        .collect();
    if event_times.is_empty() {
        return Err(TirError::NoEvents);
    }
    event_times.sort_by(f64::total_cmp);
    event_times.dedup();

    let mut blocks = Vec::with_capacity(event_times.len());
    for &time in &event_times {
        let mut events = Vec::new();
        let mut risk = Vec::new();
        for i in 0..n {
            let (end, is_event) = ends[i];
            if end >= time {
                risk.push(i);
                if is_event && end == time {
                    events.push(i);
                }
            }
        }
        blocks.push(EventBlock {
            time,
            events,
            risk,
            cov_idx: grid.left_limit_index(time * MINUTES_PER_DAY),
        });
    }
    Ok(blocks)
}

struct Objective {
    loglik: f64,
    score: DVector<f64>,
    info: DMatrix<f64>,
}

fn evaluate(
    blocks: &[EventBlock],
    covariates: &[CovariateProcess],
    beta: &DVector<f64>,
) -> Objective {
    let p = beta.len();
    let mut loglik = 0.0;
    let mut score = DVector::zeros(p);
    let mut info = DMatrix::zeros(p, p);
    let mut s1 = vec![0.0; p];
    let mut s2 = vec![0.0; p * p];
    for block in blocks {
        let mut s0 = 0.0;
        s1.iter_mut().for_each(|v| *v = 0.0);
        s2.iter_mut().for_each(|v| *v = 0.0);
        for &j in &block.risk {
            let z = covariates[j].row(block.cov_idx);
            let mut eta = 0.0;
            for c in 0..p {
                eta += z[c] * beta[c];
            }
            let w = eta.exp();
            s0 += w;
            for a in 0..p {
                let za = z[a] * w;
                s1[a] += za;
                for b in a..p {
                    s2[a * p + b] += za * z[b];
                }
            }
        }
        let d = block.events.len() as f64;
        for &i in &block.events {
            let z = covariates[i].row(block.cov_idx);
            for c in 0..p {
                loglik += z[c] * beta[c];
                score[c] += z[c];
            }
        }
        loglik -= d * s0.ln();
        for a in 0..p {
            let mean_a = s1[a] / s0;
            score[a] -= d * mean_a;
            for b in a..p {
                let v = d * (s2[a * p + b] / s0 - mean_a * s1[b] / s0);
                info[(a, b)] += v;
                if a != b {
                    info[(b, a)] += v;
                }
            }
        }
    }
    Objective { loglik, score, info }
}

/// Maximizes the time-varying-covariate partial likelihood and computes the
/// Breslow cumulative baseline hazard. Subjects with follow-up past `tau`
/// are administratively censored at `tau`; ties use the Breslow
/// approximation; risk-set covariates are taken as left limits at the event
/// time.
pub fn fit_cox(
    cohort: &Cohort,
    covariates: &[CovariateProcess],
    tau_days: f64,
    options: &CoxOptions,
) -> Result<CoxFit> {
    if cohort.len() < 2 {
        return Err(TirError::Ingest(
            "Cox fit needs at least two subjects".into(),
        ));
    }
    if covariates.len() != cohort.len() {
        return Err(TirError::Dimension(format!(
            "{} covariate processes for {} subjects",
            covariates.len(),
            cohort.len()
        )));
    }
    let p = covariates[0].dim;
    let blocks = build_event_blocks(cohort, tau_days)?;

    let mut beta = DVector::zeros(p);
    let mut current = evaluate(&blocks, covariates, &beta);
    // a covariate with no variation across risk sets is unidentifiable, even
    // though the zero score would otherwise look like instant convergence
    for c in 0..p {
        if current.info[(c, c)] <= 1e-12 {
            return Err(TirError::SingularInformation { column: c });
        }
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iterations {
        iterations += 1;
        let score_norm = current.score.amax();
        if score_norm < options.score_tol {
            converged = true;
            break;
        }
        let chol = Cholesky::new(current.info.clone()).ok_or_else(|| {
            let column = (0..p)
                .min_by(|&a, &b| current.info[(a, a)].total_cmp(&current.info[(b, b)]))
                .unwrap_or(0);
            TirError::SingularInformation { column }
        })?;
        let direction = chol.solve(&current.score);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_halvings {
            let candidate = &beta + &direction * step;
            let trial = evaluate(&blocks, covariates, &candidate);
            if trial.loglik.is_finite() && trial.loglik >= current.loglik - 1e-14 {
                let delta = trial.loglik - current.loglik;
                beta = candidate;
                current = trial;
                accepted = true;
                if delta.abs() < options.loglik_tol {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted || converged {
            break;
        }
    }
    let final_score_norm = current.score.amax();
    if final_score_norm < options.score_tol {
        converged = true;
    }

    // Breslow baseline on the fitted coefficients
    let mut breslow = Vec::with_capacity(blocks.len());
    let mut cumulative = 0.0;
    for block in &blocks {
        let mut s0 = 0.0;
        for &j in &block.risk {
            let z = covariates[j].row(block.cov_idx);
            let mut eta = 0.0;
            for c in 0..p {
                eta += z[c] * beta[c];
            }
            s0 += eta.exp();
        }
        let increment = block.events.len() as f64 / s0;
        cumulative += increment;
        breslow.push(BreslowJump {
            time_days: block.time,
            increment,
            cumulative,
        });
    }

    Ok(CoxFit {
        beta_hat: beta.iter().copied().collect(),
        breslow,
        converged,
        iterations,
        final_score_norm,
        log_partial_likelihood: current.loglik,
    })
}

/// Plug-in survival probabilities `exp{-sum_{u<=t} exp(z(u-)'beta) dLambda(u)}`
/// evaluated at every grid point.
pub fn survival_prob(
    fit: &CoxFit,
    covariate: &CovariateProcess,
    grid: &TimeGrid,
) -> SurvivalCurve {
    let p = fit.beta_hat.len();
    let mut values = Vec::with_capacity(grid.len());
    let mut cum = 0.0;
    let mut jump = 0usize;
    for &t in grid.points() {
        while jump < fit.breslow.len() && fit.breslow[jump].time_days * MINUTES_PER_DAY <= t {
            let b = &fit.breslow[jump];
            let z = covariate.row_left_of(b.time_days * MINUTES_PER_DAY);
            let mut eta = 0.0;
            for c in 0..p {
                eta += z[c] * fit.beta_hat[c];
            }
            cum += eta.exp() * b.increment;
            jump += 1;
        }
        values.push((-cum).exp());
    }
    SurvivalCurve {
        subject_id: covariate.subject_id.clone(),
        values,
    }
}

/// Survival curves for a whole cohort, one subject per curve.
pub fn survival_prob_all(
    fit: &CoxFit,
    covariates: &[CovariateProcess],
    grid: &TimeGrid,
) -> Vec<SurvivalCurve> {
    covariates
        .iter()
        .map(|cov| survival_prob(fit, cov, grid))
        .collect()
}

use std::collections::HashMap;
use std::io;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Result, TirError};
use crate::grid::{TimeGrid, MINUTES_PER_DAY};
use crate::trajectory::{Cohort, CovariateProcess, Trajectory};

/// One raw monitoring reading.
#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub subject_id: String,
    pub time_minutes: f64,
    pub glucose_mgdl: f64,
}

/// Row-level diagnostics for input that was dropped rather than ingested.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    NonFiniteGlucose { subject_id: String, time_minutes: f64 },
    NegativeTime { subject_id: String, time_minutes: f64 },
    BeyondHorizon { subject_id: String, time_minutes: f64 },
    ShortFollowup { subject_id: String, followup_days: f64 },
}

/// Result of snapping raw readings onto the canonical grid.
#[derive(Debug)]
pub struct IngestReport {
    pub cohort: Cohort,
    pub rejected: Vec<Rejection>,
}

/// Snaps raw readings onto the grid and assembles a cohort.
///
/// Each reading lands in the left-closed interval `[t_j, t_{j+1})` containing
/// its timestamp; the latest reading within an interval wins. The
/// intermittent mask is 1 exactly on intervals holding at least one reading,
/// and availability combines the mask with the follow-up cutoff. Subjects
/// whose follow-up is shorter than `min_followup_days` are dropped with a
/// diagnostic.
pub fn ingest_readings(
    rows: &[Reading],
    grid: Arc<TimeGrid>,
    followups: &HashMap<String, f64>,
    min_followup_days: f64,
    group_label: &str,
) -> Result<IngestReport> {
    if rows.is_empty() {
        return Err(TirError::Ingest("no readings supplied".into()));
    }
    let mut rejected = Vec::new();
    // preserve first-appearance subject order so ingestion is reproducible
    let mut order: Vec<String> = Vec::new();
    let mut per_subject: HashMap<String, Vec<(f64, f64)>> = HashMap::new();
    for row in rows {
        if !row.glucose_mgdl.is_finite() {
            rejected.push(Rejection::NonFiniteGlucose {
                subject_id: row.subject_id.clone(),
                time_minutes: row.time_minutes,
            });
            continue;
        }
        if row.time_minutes < 0.0 {
            rejected.push(Rejection::NegativeTime {
                subject_id: row.subject_id.clone(),
                time_minutes: row.time_minutes,
            });
            continue;
        }
        if !followups.contains_key(&row.subject_id) {
            return Err(TirError::UnknownSubject(row.subject_id.clone()));
        }
        if row.time_minutes > grid.horizon_minutes() {
            rejected.push(Rejection::BeyondHorizon {
                subject_id: row.subject_id.clone(),
                time_minutes: row.time_minutes,
            });
            continue;
        }
        per_subject
            .entry(row.subject_id.clone())
            .or_insert_with(|| {
                order.push(row.subject_id.clone());
                Vec::new()
            })
            .push((row.time_minutes, row.glucose_mgdl));
    }

    let min_followup = min_followup_days.max(grid.step_minutes() / MINUTES_PER_DAY);
    let mut trajectories = Vec::new();
    for subject in &order {
        let followup_days = followups[subject];
        if followup_days < min_followup {
            rejected.push(Rejection::ShortFollowup {
                subject_id: subject.clone(),
                followup_days,
            });
            continue;
        }
        let k = grid.len();
        let mut glucose = vec![f64::NAN; k];
        let mut mask = vec![false; k];
        // latest timestamp wins within an interval
        let mut latest = vec![f64::NEG_INFINITY; k];
        for &(t, y) in &per_subject[subject] {
            let idx = grid
                .interval_index(t)
                .expect("times validated against horizon");
            if t >= latest[idx] {
                latest[idx] = t;
                glucose[idx] = y;
                mask[idx] = true;
            }
        }
        // the closing grid point t_K = tau shares the last interval's reading
        if mask[k - 2] && !mask[k - 1] {
            mask[k - 1] = true;
            glucose[k - 1] = glucose[k - 2];
        }
        trajectories.push(Trajectory::new(
            subject.clone(),
            Arc::clone(&grid),
            glucose,
            mask,
            followup_days,
        )?);
    }
    if trajectories.is_empty() {
        return Err(TirError::Ingest(
            "every subject was rejected during ingestion".into(),
        ));
    }
    let covariates = trajectories
        .iter()
        .map(|t| {
            CovariateProcess::from_columns(
                t.subject_id.clone(),
                Arc::clone(&grid),
                &[t.prev_day_mean_path()],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let cohort = Cohort::new(grid, trajectories, covariates, group_label)?;
    Ok(IngestReport { cohort, rejected })
}

/// Emits the canonical reading rows (available grid points only). Feeding
/// these back through [`ingest_readings`] reproduces the cohort exactly.
pub fn canonical_readings(cohort: &Cohort) -> Vec<Reading> {
    let mut out = Vec::new();
    for traj in &cohort.trajectories {
        for (j, &avail) in traj.availability.iter().enumerate() {
            if avail && j < cohort.grid.len() - 1 {
                out.push(Reading {
                    subject_id: traj.subject_id.clone(),
                    time_minutes: cohort.grid.point(j),
                    glucose_mgdl: traj.glucose[j],
                });
            }
        }
    }
    out
}

/// Reads `subject_id,time_minutes,glucose_mgdl` rows.
pub fn read_readings_csv(path: &Path) -> Result<Vec<Reading>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 3 {
            return Err(TirError::Ingest(format!(
                "readings row has {} fields, expected 3",
                record.len()
            )));
        }
        rows.push(Reading {
            subject_id: record[0].to_string(),
            time_minutes: parse_f64(&record[1], "time_minutes")?,
            glucose_mgdl: parse_f64_allow_nan(&record[2], "glucose_mgdl")?,
        });
    }
    Ok(rows)
}

pub fn write_readings_csv<W: io::Write>(rows: &[Reading], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["subject_id", "time_minutes", "glucose_mgdl"])?;
    for r in rows {
        w.write_record([
            r.subject_id.as_str(),
            &r.time_minutes.to_string(),
            &r.glucose_mgdl.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `subject_id,followup_days` rows.
pub fn read_followups_csv(path: &Path) -> Result<HashMap<String, f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = HashMap::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 2 {
            return Err(TirError::Ingest(format!(
                "follow-up row has {} fields, expected 2",
                record.len()
            )));
        }
        out.insert(record[0].to_string(), parse_f64(&record[1], "followup_days")?);
    }
    if out.is_empty() {
        return Err(TirError::Ingest("follow-up file is empty".into()));
    }
    Ok(out)
}

pub fn write_followups_csv<W: io::Write>(cohort: &Cohort, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["subject_id", "followup_days"])?;
    for t in &cohort.trajectories {
        w.write_record([t.subject_id.as_str(), &t.followup_days.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads optional external covariates (`subject_id,time_minutes,z1,...,zp`)
/// and carries them forward piecewise-constantly onto the grid. Values before
/// a subject's first covariate row take that first row's values.
pub fn read_covariates_csv(path: &Path, grid: &Arc<TimeGrid>) -> Result<HashMap<String, CovariateProcess>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut dim = 0usize;
    let mut per_subject: HashMap<String, Vec<(f64, Vec<f64>)>> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 3 {
            return Err(TirError::Ingest(
                "covariate rows need subject_id, time_minutes and at least one value".into(),
            ));
        }
        let row_dim = record.len() - 2;
        if dim == 0 {
            dim = row_dim;
        } else if dim != row_dim {
            return Err(TirError::Ingest(format!(
                "covariate dimension changed from {dim} to {row_dim}"
            )));
        }
        let t = parse_f64(&record[1], "time_minutes")?;
        let values = (2..record.len())
            .map(|i| parse_f64(&record[i], "covariate"))
            .collect::<Result<Vec<f64>>>()?;
        per_subject
            .entry(record[0].to_string())
            .or_default()
            .push((t, values));
    }
    let mut out = HashMap::new();
    for (subject, mut rows) in per_subject {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut flat = Vec::with_capacity(grid.len() * dim);
        let mut cursor = 0usize;
        for &t in grid.points() {
            while cursor + 1 < rows.len() && rows[cursor + 1].0 <= t {
                cursor += 1;
            }
            flat.extend_from_slice(&rows[cursor].1);
        }
        out.insert(
            subject.clone(),
            CovariateProcess::new(subject, Arc::clone(grid), dim, flat)?,
        );
    }
    Ok(out)
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| TirError::Ingest(format!("cannot parse {what} from `{field}`")))
        .and_then(|v| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(TirError::Ingest(format!("{what} is not finite: `{field}`")))
            }
        })
}

fn parse_f64_allow_nan(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| TirError::Ingest(format!("cannot parse {what} from `{field}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<TimeGrid> {
        Arc::new(TimeGrid::five_minute(7.0).unwrap())
    }

    fn followups(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|&(s, d)| (s.to_string(), d)).collect()
    }

    #[test]
    fn direct_construction_single_subject() {
        let rows: Vec<Reading> = [0.0, 5.0, 10.0]
            .iter()
            .map(|&t| Reading {
                subject_id: "s1".into(),
                time_minutes: t,
                glucose_mgdl: 100.0,
            })
            .collect();
        let report =
            ingest_readings(&rows, grid(), &followups(&[("s1", 7.0)]), 0.0, "g").unwrap();
        let traj = &report.cohort.trajectories[0];
        assert!(traj.availability[0] && traj.availability[1] && traj.availability[2]);
        assert!(!traj.availability[3]);
        assert_eq!(traj.glucose[0], 100.0);
        assert_eq!(traj.glucose[2], 100.0);
        assert!(report.rejected.is_empty());
    }

    #[test]
    fn off_grid_reading_snaps_left_closed() {
        let rows = vec![Reading {
            subject_id: "s1".into(),
            time_minutes: 7.2,
            glucose_mgdl: 140.0,
        }];
        let report =
            ingest_readings(&rows, grid(), &followups(&[("s1", 7.0)]), 0.0, "g").unwrap();
        let traj = &report.cohort.trajectories[0];
        assert!(traj.intermittent[1], "7.2 min lands on [5, 10)");
        assert!(!traj.intermittent[0]);
        assert_eq!(traj.glucose[1], 140.0);
    }

    #[test]
    fn latest_reading_wins_in_either_order() {
        // derived by enumerating both input orders
        for flipped in [false, true] {
            let mut rows = vec![
                Reading {
                    subject_id: "s1".into(),
                    time_minutes: 6.0,
                    glucose_mgdl: 110.0,
                },
                Reading {
                    subject_id: "s1".into(),
                    time_minutes: 9.0,
                    glucose_mgdl: 130.0,
                },
            ];
            if flipped {
                rows.reverse();
            }
            let report =
                ingest_readings(&rows, grid(), &followups(&[("s1", 7.0)]), 0.0, "g").unwrap();
            assert_eq!(report.cohort.trajectories[0].glucose[1], 130.0);
        }
    }

    #[test]
    fn bad_rows_and_subjects() {
        let rows = vec![
            Reading {
                subject_id: "s1".into(),
                time_minutes: 0.0,
                glucose_mgdl: f64::NAN,
            },
            Reading {
                subject_id: "s1".into(),
                time_minutes: 5.0,
                glucose_mgdl: 100.0,
            },
        ];
        let report =
            ingest_readings(&rows, grid(), &followups(&[("s1", 7.0)]), 0.0, "g").unwrap();
        assert_eq!(report.rejected.len(), 1);

        let err = ingest_readings(&rows, grid(), &followups(&[("zz", 7.0)]), 0.0, "g");
        assert!(matches!(err, Err(TirError::UnknownSubject(_))));

        assert!(ingest_readings(&[], grid(), &followups(&[]), 0.0, "g").is_err());
    }

    #[test]
    fn short_followup_subject_dropped() {
        let rows = vec![
            Reading {
                subject_id: "short".into(),
                time_minutes: 0.0,
                glucose_mgdl: 100.0,
            },
            Reading {
                subject_id: "ok".into(),
                time_minutes: 0.0,
                glucose_mgdl: 100.0,
            },
        ];
        let report = ingest_readings(
            &rows,
            grid(),
            &followups(&[("short", 0.001), ("ok", 7.0)]),
            0.0,
            "g",
        )
        .unwrap();
        assert_eq!(report.cohort.len(), 1);
        assert!(matches!(
            report.rejected[0],
            Rejection::ShortFollowup { .. }
        ));
    }

    #[test]
    fn ingestion_is_idempotent() {
        let rows = vec![
            Reading {
                subject_id: "a".into(),
                time_minutes: 2.0,
                glucose_mgdl: 101.0,
            },
            Reading {
                subject_id: "a".into(),
                time_minutes: 17.0,
                glucose_mgdl: 190.5,
            },
            Reading {
                subject_id: "b".into(),
                time_minutes: 0.0,
                glucose_mgdl: 65.25,
            },
        ];
        let fups = followups(&[("a", 3.0), ("b", 5.5)]);
        let first = ingest_readings(&rows, grid(), &fups, 0.0, "g").unwrap();
        let canonical = canonical_readings(&first.cohort);
        let second = ingest_readings(&canonical, grid(), &fups, 0.0, "g").unwrap();
        assert_eq!(first.cohort.len(), second.cohort.len());
        for (x, y) in first
            .cohort
            .trajectories
            .iter()
            .zip(&second.cohort.trajectories)
        {
            assert_eq!(x.subject_id, y.subject_id);
            assert_eq!(x.followup_days, y.followup_days);
            assert_eq!(x.intermittent, y.intermittent);
            assert_eq!(x.availability, y.availability);
            // bitwise so the NaN gaps compare equal too
            let bits = |v: &[f64]| v.iter().map(|g| g.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&x.glucose), bits(&y.glucose));
        }
    }
}

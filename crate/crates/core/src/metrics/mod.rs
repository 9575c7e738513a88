//! Per-job records and the series derived from them: occupied cores and
//! running jobs over time, wait-time CDF, summary statistics.

mod export;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimTime;

pub use export::{
    export, read_jobs_csv, read_metrics_json, read_series_csv, read_summary, write_event_log,
    ExportFormat, MetricsDocument, EXPORT_FILES,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub submit: SimTime,
    pub start: SimTime,
    pub finish: SimTime,
    pub cores: u64,
    pub wait: u64,
    /// Wait recorded in the source trace, when it had one.
    pub trace_wait: Option<u64>,
}

impl JobRecord {
    pub fn new(id: impl Into<String>, submit: SimTime, start: SimTime, finish: SimTime, cores: u64) -> Self {
        debug_assert!(submit <= start && start <= finish);
        JobRecord { id: id.into(), submit, start, finish, cores, wait: start - submit, trace_wait: None }
    }

    pub fn duration(&self) -> u64 {
        self.finish - self.start
    }
}

/// An entity a truncated run left unfinished.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unfinished {
    pub id: String,
    pub state: String,
    pub submit: SimTime,
    pub start: Option<SimTime>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetricsLog {
    pub records: Vec<JobRecord>,
    pub total_cores: u64,
    pub unfinished: Vec<Unfinished>,
}

impl MetricsLog {
    pub fn occupied(&self) -> StepSeries {
        occupied_series(&self.records, self.total_cores)
    }

    pub fn running(&self) -> StepSeries {
        running_jobs_series(&self.records)
    }

    pub fn summary(&self) -> SummaryStats {
        SummaryStats::from_records(&self.records, self.total_cores)
    }

    pub fn wait_cdf(&self, num_points: usize) -> Result<Vec<CdfPoint>, MetricsError> {
        wait_cdf(&self.records, num_points)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no records")]
    EmptyInput,
    #[error("num_points must be at least 1")]
    ZeroPoints,
    #[error("{0}")]
    Io(String),
    #[error("cannot decode {path}: {reason}")]
    Decode { path: String, reason: String },
}

/// Piecewise-constant series; each value holds from its time until the next.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSeries {
    pub points: Vec<(SimTime, u64)>,
}

impl StepSeries {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn max_value(&self) -> u64 {
        self.points.iter().map(|p| p.1).max().unwrap_or(0)
    }

    /// Value in effect at `t` (0 before the first point).
    pub fn value_at(&self, t: SimTime) -> u64 {
        match self.points.partition_point(|p| p.0 <= t) {
            0 => 0,
            i => self.points[i - 1].1,
        }
    }

    /// Exact integral over the whole series.
    pub fn area(&self) -> u128 {
        self.points
            .windows(2)
            .map(|w| u128::from(w[0].1) * u128::from(w[1].0 - w[0].0))
            .sum()
    }
}

fn step_series(records: &[JobRecord], weight: impl Fn(&JobRecord) -> u64) -> StepSeries {
    let mut deltas: BTreeMap<SimTime, i128> = BTreeMap::new();
    for r in records {
        let w = i128::from(weight(r));
        *deltas.entry(r.start).or_default() += w;
        *deltas.entry(r.finish).or_default() -= w;
    }
    let mut level: i128 = 0;
    let points = deltas
        .into_iter()
        .map(|(t, d)| {
            level += d;
            debug_assert!(level >= 0);
            (t, level as u64)
        })
        .collect();
    StepSeries { points }
}

/// Cores busy over time, with a point at every start/finish boundary.
pub fn occupied_series(records: &[JobRecord], total_cores: u64) -> StepSeries {
    let s = step_series(records, |r| r.cores);
    debug_assert!(total_cores == 0 || s.max_value() <= total_cores);
    s
}

pub fn running_jobs_series(records: &[JobRecord]) -> StepSeries {
    step_series(records, |_| 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub wait: u64,
    pub fraction: f64,
}

/// Empirical CDF of wait times. One point per distinct wait, thinned to at
/// most `num_points` (always keeping the last, whose fraction is 1).
pub fn wait_cdf(records: &[JobRecord], num_points: usize) -> Result<Vec<CdfPoint>, MetricsError> {
    if num_points == 0 {
        return Err(MetricsError::ZeroPoints);
    }
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut waits: Vec<u64> = records.iter().map(|r| r.wait).collect();
    waits.sort_unstable();
    let n = waits.len();
    let mut steps = Vec::new();
    for (i, &w) in waits.iter().enumerate() {
        if i + 1 == n || waits[i + 1] != w {
            steps.push(CdfPoint { wait: w, fraction: (i + 1) as f64 / n as f64 });
        }
    }
    if steps.len() <= num_points {
        return Ok(steps);
    }
    let s = steps.len();
    Ok((1..=num_points).map(|k| steps[(k * s).div_ceil(num_points) - 1]).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub jobs: usize,
    pub mean_wait: f64,
    pub median_wait: f64,
    pub max_wait: u64,
    pub makespan: u64,
    pub utilization: f64,
    pub total_cores: u64,
}

impl SummaryStats {
    pub fn from_records(records: &[JobRecord], total_cores: u64) -> Self {
        if records.is_empty() {
            return SummaryStats { total_cores, ..Default::default() };
        }
        let mut waits: Vec<u64> = records.iter().map(|r| r.wait).collect();
        waits.sort_unstable();
        let n = waits.len();
        let mean_wait = waits.iter().map(|&w| w as f64).sum::<f64>() / n as f64;
        let median_wait = if n % 2 == 1 {
            waits[n / 2] as f64
        } else {
            (waits[n / 2 - 1] as f64 + waits[n / 2] as f64) / 2.0
        };
        let first_submit = records.iter().map(|r| r.submit).min().unwrap();
        let last_finish = records.iter().map(|r| r.finish).max().unwrap();
        let makespan = last_finish - first_submit;
        let busy: u128 = records.iter().map(|r| u128::from(r.cores) * u128::from(r.duration())).sum();
        let capacity = u128::from(total_cores) * u128::from(makespan);
        let utilization = if capacity == 0 { 0.0 } else { busy as f64 / capacity as f64 };
        SummaryStats {
            jobs: n,
            mean_wait,
            median_wait,
            max_wait: *waits.last().unwrap(),
            makespan,
            utilization,
            total_cores,
        }
    }
}
